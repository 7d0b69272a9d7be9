import { Table, column } from "./csv.js";
import { Frame, Svg, dataExtent, seedColor } from "./svg.js";
import { FigureRecipe } from "./recipe.js";

const TWO_PI = 2 * Math.PI;

/** Cat's eye stream function; recomputed here from its closed form rather
 *  than shipped as an artifact. */
export function streamFunction(x: number, y: number, c: number): number {
    return -Math.log(c * Math.cosh(y) + Math.sqrt(c * c - 1) * Math.cos(x));
}

type Segment = [[number, number], [number, number]];

/** Marching-squares level set of psi on a regular grid. */
export function psiContour(level: number, c: number, yMax: number,
                           nx = 240, ny = 120): Segment[] {
    const xs = Array.from({ length: nx + 1 }, (_, i) => (i / nx) * TWO_PI);
    const ys = Array.from({ length: ny + 1 }, (_, j) => -yMax + (j / ny) * 2 * yMax);
    const f = xs.map(x => ys.map(y => streamFunction(x, y, c) - level));
    const segments: Segment[] = [];
    const interp = (pa: [number, number], pb: [number, number], fa: number, fb: number):
        [number, number] => {
        const t = fa / (fa - fb);
        return [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
    };
    for (let i = 0; i < nx; i++) {
        for (let j = 0; j < ny; j++) {
            const corners: Array<[number, number]> = [
                [xs[i], ys[j]], [xs[i + 1], ys[j]], [xs[i + 1], ys[j + 1]], [xs[i], ys[j + 1]],
            ];
            const vals = [f[i][j], f[i + 1][j], f[i + 1][j + 1], f[i][j + 1]];
            const pts: Array<[number, number]> = [];
            for (let e = 0; e < 4; e++) {
                const a = e, b = (e + 1) % 4;
                if ((vals[a] < 0) !== (vals[b] < 0)) {
                    pts.push(interp(corners[a], corners[b], vals[a], vals[b]));
                }
            }
            if (pts.length >= 2) {
                segments.push([pts[0], pts[1]]);
            }
            if (pts.length === 4) {
                segments.push([pts[2], pts[3]]);
            }
        }
    }
    return segments;
}

/** Line x,y-projections (x wrapped into one period) with dotted stream-function
 *  level sets through each line's seed. */
export function renderPsiOverlay(table: Table, recipe: FigureRecipe, metadata: string): string {
    const xs = column(table, "x").map(x => ((x % TWO_PI) + TWO_PI) % TWO_PI);
    const ys = column(table, "y");
    const seeds = column(table, "seed_id");
    const sArc = column(table, "s");
    if (xs.length === 0) {
        throw new Error("psi-overlay: the line artifact contains no vertices");
    }
    const c = recipe.streamC ?? 2.0;
    const style = recipe.style ?? {};
    const width = style.width ?? 800;
    const height = style.height ?? 520;
    const yMax = Math.max(...ys.map(Math.abs)) * 1.1;
    const extent = { xmin: 0, xmax: TWO_PI, ymin: -yMax, ymax: yMax };
    const frame = new Frame(extent, width, height);
    const svg = new Svg(width, height, metadata);

    // dotted level sets of psi at the seed values
    const levels = new Map<number, number>();
    for (let i = 0; i < xs.length; i++) {
        if (sArc[i] === 0 && !levels.has(seeds[i])) {
            levels.set(seeds[i], streamFunction(xs[i], ys[i], c));
        }
    }
    for (const level of levels.values()) {
        for (const [a, b] of psiContour(level, c, yMax)) {
            svg.polyline([[frame.px(a[0]), frame.py(a[1])],
                          [frame.px(b[0]), frame.py(b[1])]], "#444444", 0.6, true);
        }
    }

    // solid projected lines, split at the periodic seam
    let run: Array<[number, number]> = [];
    let current = seeds[0];
    let lastX = xs[0];
    const flush = () => {
        if (run.length > 1) {
            svg.polyline(run, seedColor(current), 0.9);
        }
        run = [];
    };
    for (let i = 0; i < xs.length; i++) {
        if (seeds[i] !== current || Math.abs(xs[i] - lastX) > Math.PI) {
            flush();
            current = seeds[i];
        }
        run.push([frame.px(xs[i]), frame.py(ys[i])]);
        lastX = xs[i];
    }
    flush();

    // seed markers
    for (let i = 0; i < xs.length; i++) {
        if (sArc[i] === 0) {
            svg.circle(frame.px(xs[i]), frame.py(ys[i]), 3.0, "#00aa00");
        }
    }
    if (style.title) {
        svg.text(frame.margin, 20, style.title);
    }
    return svg.render();
}
