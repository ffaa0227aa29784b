// Von Mises heatmap colors on a fixed scale: the same stress value always
// renders the same color, across frames and sessions.

export const DEFAULT_VM_MAX_PA = 8000;

// cool blue -> warm red through the usual heatmap stops
const STOPS: [number, [number, number, number]][] = [
  [0.0, [40, 70, 200]],
  [0.35, [60, 200, 190]],
  [0.6, [240, 220, 60]],
  [0.85, [250, 120, 40]],
  [1.0, [230, 30, 30]],
];

export function vmToColor(vm: number, vmMax: number = DEFAULT_VM_MAX_PA): string {
  const t = Math.max(0, Math.min(1, vm / vmMax));
  let lo = STOPS[0];
  let hi = STOPS[STOPS.length - 1];
  for (let i = 0; i + 1 < STOPS.length; i++) {
    if (t >= STOPS[i][0] && t <= STOPS[i + 1][0]) {
      lo = STOPS[i];
      hi = STOPS[i + 1];
      break;
    }
  }
  const span = hi[0] - lo[0] || 1;
  const u = (t - lo[0]) / span;
  const c = lo[1].map((a, i) => Math.round(a + (hi[1][i] - a) * u));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
