/** Minimal SVG emission helpers. */

export interface SvgElement {
  tag: string;
  attrs: Record<string, string | number>;
  text?: string;
}

export function render(
  width: number, height: number, elements: SvgElement[]): string {
  const body = elements
    .map((e) => {
      const attrs = Object.entries(e.attrs)
        .map(([k, v]) => `${k}="${v}"`)
        .join(" ");
      return e.text !== undefined
        ? `<${e.tag} ${attrs}>${e.text}</${e.tag}>`
        : `<${e.tag} ${attrs}/>`;
    })
    .join("\n  ");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">\n  ${body}\n</svg>\n`;
}

export function polylineElement(
  points: Array<[number, number]>,
  stroke: string,
  dash: string,
  cls: string): SvgElement {
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`)
    .join(" ");
  const attrs: Record<string, string | number> = {
    points: pts, fill: "none", stroke, "stroke-width": 1, class: cls,
  };
  if (dash !== "") attrs["stroke-dasharray"] = dash;
  return { tag: "polyline", attrs };
}

export function textElement(
  x: number, y: number, text: string, size = 12): SvgElement {
  return {
    tag: "text",
    attrs: { x, y, "font-size": size, "font-family": "sans-serif" },
    text,
  };
}
