/** Minimal deterministic SVG builder: plain strings, fixed number formatting,
 *  no timestamps, so identical inputs give byte-identical images. */

export function num(v: number): string {
    return Number(v.toFixed(3)).toString();
}

export class Svg {
    private parts: string[] = [];

    constructor(readonly width: number, readonly height: number, metadata: string) {
        this.parts.push(
            `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
            `viewBox="0 0 ${width} ${height}">`);
        this.parts.push(`<!-- ${metadata} -->`);
        this.parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    }

    circle(cx: number, cy: number, r: number, fill: string): void {
        this.parts.push(`<circle cx="${num(cx)}" cy="${num(cy)}" r="${num(r)}" fill="${fill}"/>`);
    }

    rect(x: number, y: number, w: number, h: number, fill: string): void {
        this.parts.push(
            `<rect x="${num(x)}" y="${num(y)}" width="${num(w)}" height="${num(h)}" fill="${fill}"/>`);
    }

    polyline(points: Array<[number, number]>, stroke: string, width = 1.0,
             dashed = false): void {
        const pts = points.map(([x, y]) => `${num(x)},${num(y)}`).join(" ");
        const dash = dashed ? ` stroke-dasharray="3,3"` : "";
        this.parts.push(
            `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
            `stroke-width="${num(width)}"${dash}/>`);
    }

    polygon(points: Array<[number, number]>, fill: string, stroke = "none"): void {
        const pts = points.map(([x, y]) => `${num(x)},${num(y)}`).join(" ");
        this.parts.push(`<polygon points="${pts}" fill="${fill}" stroke="${stroke}" stroke-width="0.3"/>`);
    }

    text(x: number, y: number, content: string, size = 12): void {
        this.parts.push(
            `<text x="${num(x)}" y="${num(y)}" font-family="sans-serif" ` +
            `font-size="${size}" fill="black">${content}</text>`);
    }

    render(): string {
        return this.parts.join("\n") + "\n</svg>\n";
    }
}

export interface Extent {
    xmin: number;
    xmax: number;
    ymin: number;
    ymax: number;
}

export function dataExtent(xs: number[], ys: number[], pad = 0.02): Extent {
    const xmin = Math.min(...xs), xmax = Math.max(...xs);
    const ymin = Math.min(...ys), ymax = Math.max(...ys);
    const dx = (xmax - xmin) || 1, dy = (ymax - ymin) || 1;
    return {
        xmin: xmin - pad * dx, xmax: xmax + pad * dx,
        ymin: ymin - pad * dy, ymax: ymax + pad * dy,
    };
}

/** Data -> pixel mapping with the y axis pointing up. */
export class Frame {
    constructor(readonly extent: Extent, readonly width: number,
                readonly height: number, readonly margin = 32) {}

    px(x: number): number {
        const { xmin, xmax } = this.extent;
        return this.margin + (x - xmin) / (xmax - xmin) * (this.width - 2 * this.margin);
    }

    py(y: number): number {
        const { ymin, ymax } = this.extent;
        return this.height - this.margin
            - (y - ymin) / (ymax - ymin) * (this.height - 2 * this.margin);
    }
}

const PALETTE = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#aec7e8", "#98df8a",
];

export function seedColor(seedId: number): string {
    return PALETTE[((seedId % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

/** Small perceptual ramp (dark blue -> yellow) for scalar fields. */
export function heatColor(t: number): string {
    const c = Math.min(1, Math.max(0, t));
    const stops: Array<[number, number, number]> = [
        [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
    ];
    const pos = c * (stops.length - 1);
    const i = Math.min(stops.length - 2, Math.floor(pos));
    const f = pos - i;
    const mix = (a: number, b: number) => Math.round(a + (b - a) * f);
    const [r, g, b] = [0, 1, 2].map(k => mix(stops[i][k], stops[i + 1][k]));
    return `rgb(${r},${g},${b})`;
}
