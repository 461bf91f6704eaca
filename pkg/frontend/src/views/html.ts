/** Small HTML helpers shared by the views. */

export function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Verdicts map to stable CSS classes for the badge styling. */
export function verdictBadge(label: string): string {
  return `<span class="badge badge-${esc(label.toLowerCase())}">${esc(label)}</span>`;
}
