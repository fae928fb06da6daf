/** Minimal SVG line charts. Only display-space scaling happens here; the
 * data values come straight from a view-model. */

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = { width: 640, height: 220, padding: 24 };

export function linePath(
  weeks: number[],
  values: number[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
  yMin = 0,
  yMax = 1,
): string {
  if (weeks.length === 0) return '';
  const { width, height, padding } = geometry;
  const spanX = Math.max(1, weeks[weeks.length - 1] - weeks[0]);
  const innerW = width - 2 * padding;
  const innerH = height - 2 * padding;
  const pts = weeks.map((week, i) => {
    const x = padding + ((week - weeks[0]) / spanX) * innerW;
    const y = padding + (1 - (values[i] - yMin) / (yMax - yMin)) * innerH;
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  return `M ${pts[0]} L ${pts.slice(1).join(' ')}`;
}

export function overlayPaths(
  weeks: number[],
  base: number[],
  adjusted: number[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): { base: string; adjusted: string } {
  return {
    base: linePath(weeks, base, geometry),
    adjusted: linePath(weeks, adjusted, geometry),
  };
}
