import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { readCsv } from "./csv.js";
import { checkHash, readManifest } from "./manifest.js";
import { FigureRecipe } from "./recipe.js";
import { renderScatter } from "./scatter.js";
import { renderHeatmap } from "./heatmap.js";
import { renderLines3d } from "./lines3d.js";
import { renderSurface3d } from "./surface3d.js";
import { renderPsiOverlay } from "./psiOverlay.js";

export const VERSION = "0.1.0";

/** Render a recipe to an SVG string. Never mutates artifacts; deterministic
 *  for byte-identical inputs (the library version is recorded in the image
 *  metadata comment). */
export function renderRecipe(recipe: FigureRecipe): string {
    if (!existsSync(recipe.csv)) {
        throw new Error(`artifact not found: ${recipe.csv}`);
    }
    if (!existsSync(recipe.manifest)) {
        throw new Error(`manifest not found: ${recipe.manifest}`);
    }
    const manifest = readManifest(recipe.manifest);
    checkHash(manifest, recipe.expectHash, recipe.manifest);
    const table = readCsv(recipe.csv);
    if (table.rows.length === 0) {
        throw new Error(`artifact is empty: ${recipe.csv}`);
    }
    const metadata =
        `figure-scripts v${VERSION} kind=${recipe.kind} hash=${manifest.config_hash}`;
    switch (recipe.kind) {
        case "scatter":
            return renderScatter(table, recipe, metadata);
        case "heatmap":
            return renderHeatmap(table, manifest, recipe, metadata);
        case "lines3d":
            return renderLines3d(table, recipe, metadata);
        case "surface3d":
            return renderSurface3d(table, recipe, metadata);
        case "psi-overlay":
            return renderPsiOverlay(table, recipe, metadata);
    }
}

/** Render to a file; nothing is written when rendering fails. */
export function renderToFile(recipe: FigureRecipe, outPath: string): void {
    const svg = renderRecipe(recipe);
    mkdirSync(dirname(outPath), { recursive: true });
    writeFileSync(outPath, svg, "utf-8");
}
