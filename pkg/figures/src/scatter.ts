import { Table, column } from "./csv.js";
import { Frame, Svg, dataExtent, seedColor } from "./svg.js";
import { FigureRecipe } from "./recipe.js";

/** Poincare-map style scatter: section points colored by seed. */
export function renderScatter(table: Table, recipe: FigureRecipe, metadata: string): string {
    const u = column(table, "x");
    const v = column(table, "y");
    const seeds = column(table, "seed_id");
    if (u.length === 0) {
        throw new Error("scatter: the section artifact contains no points");
    }
    const style = recipe.style ?? {};
    const width = style.width ?? 720;
    const height = style.height ?? 720;
    const e = style.extent;
    const extent = e
        ? { xmin: e[0], xmax: e[1], ymin: e[2], ymax: e[3] }
        : dataExtent(u, v);
    const frame = new Frame(extent, width, height);
    const svg = new Svg(width, height, metadata);
    const r = style.pointSize ?? 1.2;
    for (let i = 0; i < u.length; i++) {
        svg.circle(frame.px(u[i]), frame.py(v[i]), r, seedColor(seeds[i]));
    }
    if (style.title) {
        svg.text(frame.margin, 20, style.title);
    }
    return svg.render();
}
