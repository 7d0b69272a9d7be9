import { Table, column } from "./csv.js";
import { Frame, Svg, dataExtent, heatColor } from "./svg.js";
import { DEFAULT_CAMERA, project } from "./project3d.js";
import { FigureRecipe } from "./recipe.js";

/** Structured quad mesh (i, j, x, y, z rows) as a painter-sorted surface. */
export function renderSurface3d(table: Table, recipe: FigureRecipe, metadata: string): string {
    const ii = column(table, "i");
    const jj = column(table, "j");
    const xs = column(table, "x");
    const ys = column(table, "y");
    const zs = column(table, "z");
    if (xs.length === 0) {
        throw new Error("surface3d: the mesh artifact contains no vertices");
    }
    const nI = Math.max(...ii) + 1;
    const nJ = Math.max(...jj) + 1;
    if (nI * nJ !== xs.length) {
        throw new Error(`surface3d: grid ${nI}x${nJ} does not match ${xs.length} rows`);
    }
    const vertex = (i: number, j: number): [number, number, number] => {
        const k = i * nJ + j;
        return [xs[k], ys[k], zs[k]];
    };
    interface Quad {
        pts: Array<[number, number]>;
        depth: number;
        shade: number;
    }
    const projected = xs.map((_, k) => project([xs[k], ys[k], zs[k]], DEFAULT_CAMERA));
    const us = projected.map(p => p[0]);
    const vs = projected.map(p => p[1]);
    const style = recipe.style ?? {};
    const width = style.width ?? 800;
    const height = style.height ?? 640;
    const frame = new Frame(dataExtent(us, vs), width, height);
    const quads: Quad[] = [];
    for (let i = 0; i < nI; i++) {
        for (let j = 0; j < nJ; j++) {
            const corners = [
                [i, j], [(i + 1) % nI, j], [(i + 1) % nI, (j + 1) % nJ], [i, (j + 1) % nJ],
            ] as const;
            // skip quads that wrap the periodic seam in space
            const pts3 = corners.map(([a, b]) => vertex(a, b));
            const zspan = Math.max(...pts3.map(p => p[2])) - Math.min(...pts3.map(p => p[2]));
            if (zspan > Math.PI) {
                continue;
            }
            const proj = pts3.map(p => project(p, DEFAULT_CAMERA));
            const depth = proj.reduce((acc, p) => acc + p[2], 0) / 4;
            // flat shading from the z-normal magnitude of the projected quad
            const ax = proj[1][0] - proj[0][0], ay = proj[1][1] - proj[0][1];
            const bx = proj[3][0] - proj[0][0], by = proj[3][1] - proj[0][1];
            const area = Math.abs(ax * by - ay * bx);
            quads.push({
                pts: proj.map(p => [frame.px(p[0]), frame.py(p[1])] as [number, number]),
                depth,
                shade: area,
            });
        }
    }
    quads.sort((a, b) => a.depth - b.depth || a.pts[0][0] - b.pts[0][0]);
    const maxShade = Math.max(...quads.map(q => q.shade)) || 1;
    const svg = new Svg(width, height, metadata);
    for (const q of quads) {
        svg.polygon(q.pts, heatColor(0.25 + 0.6 * q.shade / maxShade), "#555555");
    }
    if (style.title) {
        svg.text(frame.margin, 20, style.title);
    }
    return svg.render();
}
