import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

export type FigureKind = "scatter" | "heatmap" | "lines3d" | "surface3d" | "psi-overlay";

export interface Style {
    width?: number;
    height?: number;
    pointSize?: number;
    extent?: [number, number, number, number];
    title?: string;
}

export interface FigureRecipe {
    kind: FigureKind;
    /** CSV artifact path, relative to the recipe file. */
    csv: string;
    /** Manifest path, relative to the recipe file. */
    manifest: string;
    /** Expected manifest config hash; rendering refuses on mismatch. */
    expectHash: string;
    style?: Style;
    /** psi-overlay only: stream-function parameter. */
    streamC?: number;
}

const KINDS: FigureKind[] = ["scatter", "heatmap", "lines3d", "surface3d", "psi-overlay"];

export function loadRecipe(path: string): FigureRecipe {
    const raw = JSON.parse(readFileSync(path, "utf-8"));
    if (!KINDS.includes(raw.kind)) {
        throw new Error(`recipe kind must be one of ${KINDS.join(", ")}, got '${raw.kind}'`);
    }
    for (const key of ["csv", "manifest", "expectHash"] as const) {
        if (typeof raw[key] !== "string") {
            throw new Error(`recipe is missing required string field '${key}'`);
        }
    }
    const base = dirname(resolve(path));
    return {
        kind: raw.kind,
        csv: resolve(base, raw.csv),
        manifest: resolve(base, raw.manifest),
        expectHash: raw.expectHash,
        style: raw.style ?? {},
        streamC: raw.streamC,
    };
}
