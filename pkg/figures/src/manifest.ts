import { readFileSync } from "node:fs";

export interface Manifest {
    command: string;
    config: Record<string, unknown>;
    config_hash: string;
    artifacts: string[];
    extra?: Record<string, unknown>;
}

export function readManifest(path: string): Manifest {
    const payload = JSON.parse(readFileSync(path, "utf-8"));
    if (typeof payload.config_hash !== "string") {
        throw new Error(`${path} is not a run manifest (missing config_hash)`);
    }
    return payload as Manifest;
}

/** Recipes pin the artifact they were written for; refuse to render others. */
export function checkHash(manifest: Manifest, expected: string, path: string): void {
    if (manifest.config_hash !== expected) {
        throw new Error(
            `manifest hash mismatch for ${path}: recipe expects ${expected}, ` +
            `artifact has ${manifest.config_hash}`);
    }
}
