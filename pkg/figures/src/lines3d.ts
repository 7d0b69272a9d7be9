import { Table, column } from "./csv.js";
import { Frame, Svg, dataExtent, seedColor } from "./svg.js";
import { DEFAULT_CAMERA, project } from "./project3d.js";
import { FigureRecipe } from "./recipe.js";

/** Direction lines in 3D: one projected polyline per seed. */
export function renderLines3d(table: Table, recipe: FigureRecipe, metadata: string): string {
    const xs = column(table, "x");
    const ys = column(table, "y");
    const zs = column(table, "z");
    const seeds = column(table, "seed_id");
    if (xs.length === 0) {
        throw new Error("lines3d: the line artifact contains no vertices");
    }
    const us: number[] = [];
    const vs: number[] = [];
    for (let i = 0; i < xs.length; i++) {
        const [u, v] = project([xs[i], ys[i], zs[i]], DEFAULT_CAMERA);
        us.push(u);
        vs.push(v);
    }
    const style = recipe.style ?? {};
    const width = style.width ?? 800;
    const height = style.height ?? 640;
    const frame = new Frame(dataExtent(us, vs), width, height);
    const svg = new Svg(width, height, metadata);
    let run: Array<[number, number]> = [];
    let current = seeds[0];
    const flush = () => {
        if (run.length > 1) {
            svg.polyline(run, seedColor(current), 0.8);
        }
        run = [];
    };
    for (let i = 0; i < us.length; i++) {
        if (seeds[i] !== current) {
            flush();
            current = seeds[i];
        }
        run.push([frame.px(us[i]), frame.py(vs[i])]);
    }
    flush();
    if (style.title) {
        svg.text(frame.margin, 20, style.title);
    }
    return svg.render();
}
