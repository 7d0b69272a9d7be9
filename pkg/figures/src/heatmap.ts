import { Table, column } from "./csv.js";
import { Manifest } from "./manifest.js";
import { Frame, Svg, dataExtent, heatColor } from "./svg.js";
import { FigureRecipe } from "./recipe.js";

/** Scalar-field heatmap (FTLE or angle error) from a row-major grid CSV. */
export function renderHeatmap(table: Table, manifest: Manifest, recipe: FigureRecipe,
                              metadata: string): string {
    const grid = (manifest.extra as { grid?: [number, number] } | undefined)?.grid;
    if (!grid) {
        throw new Error("heatmap: manifest carries no grid shape (extra.grid)");
    }
    const [nx, ny] = grid;
    const xs = column(table, "x");
    const ys = column(table, "y");
    const valueColumn = table.header.includes("ftle") ? "ftle" : "angle_deg";
    const vals = column(table, valueColumn);
    if (vals.length !== nx * ny) {
        throw new Error(`heatmap: expected ${nx * ny} grid rows, got ${vals.length}`);
    }
    const style = recipe.style ?? {};
    const width = style.width ?? 720;
    const height = style.height ?? 720;
    const extent = dataExtent(xs, ys, 0.0);
    const frame = new Frame(extent, width, height);
    const svg = new Svg(width, height, metadata);
    const lo = Math.min(...vals);
    const hi = Math.max(...vals);
    const span = hi - lo || 1;
    const cellW = (frame.px(extent.xmax) - frame.px(extent.xmin)) / nx;
    const cellH = (frame.py(extent.ymin) - frame.py(extent.ymax)) / ny;
    for (let i = 0; i < nx; i++) {
        for (let j = 0; j < ny; j++) {
            const v = vals[i * ny + j];  // row-major seed order from the CLI
            const x = frame.px(xs[i * ny + j]) - cellW / 2;
            const y = frame.py(ys[i * ny + j]) - cellH / 2;
            svg.rect(x, y, cellW + 0.5, cellH + 0.5, heatColor((v - lo) / span));
        }
    }
    if (style.title) {
        svg.text(frame.margin, 20, `${style.title} (${valueColumn}: ${lo.toFixed(3)}..${hi.toFixed(3)})`);
    }
    return svg.render();
}
