// XYZ parsing and the minimal 3D projection used by the structure viewer
// (ball positions only; bond perception is out of scope).

export interface Atom {
  el: string;
  x: number;
  y: number;
  z: number;
}

export interface ParsedXyz {
  count: number;
  comment: string;
  atoms: Atom[];
}

export class XyzError extends Error {}

export function parseXyz(text: string): ParsedXyz {
  const lines = text.split(/\r?\n/);
  if (lines.length < 2 || lines[0].trim() === "") {
    throw new XyzError("missing atom-count line");
  }
  const count = Number(lines[0].trim());
  if (!Number.isInteger(count) || count < 1) {
    throw new XyzError(`bad atom count: ${lines[0].trim()}`);
  }
  const body = lines.slice(2).filter((ln) => ln.trim() !== "");
  if (body.length !== count) {
    throw new XyzError(`count line says ${count} atoms, found ${body.length}`);
  }
  const atoms: Atom[] = body.map((ln) => {
    const parts = ln.trim().split(/\s+/);
    if (parts.length < 4) throw new XyzError(`bad atom line: ${ln}`);
    const [el, xs, ys, zs] = parts;
    const [x, y, z] = [Number(xs), Number(ys), Number(zs)];
    if ([x, y, z].some((v) => Number.isNaN(v))) {
      throw new XyzError(`non-numeric coordinate: ${ln}`);
    }
    return { el, x, y, z };
  });
  return { count, comment: lines[1] ?? "", atoms };
}

// rough CPK palette; anything unlisted renders grey
const COLORS: Record<string, string> = {
  H: "#e8e8e8",
  C: "#3b3b3b",
  N: "#2f5bd8",
  O: "#d23c2a",
  F: "#71c837",
  Cl: "#35b552",
  S: "#d8c12f",
  P: "#e07b2e",
  Ce: "#c8a234",
};

const RADII: Record<string, number> = { H: 0.5, C: 0.75, N: 0.7, O: 0.66, Ce: 1.3 };

export interface Ball {
  x: number;
  y: number;
  r: number;
  color: string;
  el: string;
}

/** Rotate around the y then x axis, project orthographically into a
 * size x size viewport, and return balls sorted back-to-front. */
export function projectAtoms(
  atoms: Atom[],
  size: number,
  rotYRad = 0.6,
  rotXRad = 0.35,
): Ball[] {
  if (atoms.length === 0) return [];
  const cx = atoms.reduce((s, a) => s + a.x, 0) / atoms.length;
  const cy = atoms.reduce((s, a) => s + a.y, 0) / atoms.length;
  const cz = atoms.reduce((s, a) => s + a.z, 0) / atoms.length;
  const rotated = atoms.map((a) => {
    const x0 = a.x - cx;
    const y0 = a.y - cy;
    const z0 = a.z - cz;
    const x1 = x0 * Math.cos(rotYRad) + z0 * Math.sin(rotYRad);
    const z1 = -x0 * Math.sin(rotYRad) + z0 * Math.cos(rotYRad);
    const y2 = y0 * Math.cos(rotXRad) - z1 * Math.sin(rotXRad);
    const z2 = y0 * Math.sin(rotXRad) + z1 * Math.cos(rotXRad);
    return { el: a.el, x: x1, y: y2, z: z2 };
  });
  const extent = Math.max(0.1, ...rotated.map((a) => Math.max(Math.abs(a.x), Math.abs(a.y))));
  const scale = (size / 2 - 14) / extent;
  return rotated
    .sort((a, b) => a.z - b.z)
    .map((a) => ({
      x: size / 2 + a.x * scale,
      y: size / 2 - a.y * scale,
      r: Math.max(3, (RADII[a.el] ?? 0.8) * scale * 0.35),
      color: COLORS[a.el] ?? "#9a9a9a",
      el: a.el,
    }));
}
