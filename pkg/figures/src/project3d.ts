/** Fixed-view orthographic projection for 3D line and surface figures. */

export interface Camera {
    /** yaw then pitch, radians */
    yaw: number;
    pitch: number;
}

export const DEFAULT_CAMERA: Camera = { yaw: -0.9, pitch: 0.42 };

export function project(p: [number, number, number], cam: Camera): [number, number, number] {
    const [x, y, z] = p;
    const cy = Math.cos(cam.yaw), sy = Math.sin(cam.yaw);
    const cp = Math.cos(cam.pitch), sp = Math.sin(cam.pitch);
    const x1 = cy * x + sy * y;
    const y1 = -sy * x + cy * y;
    const u = x1;
    const v = cp * z - sp * y1;
    const depth = cp * y1 + sp * z;
    return [u, v, depth];
}
