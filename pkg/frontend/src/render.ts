/** Tiny DOM builders. Data always enters the page as text nodes, never
 * as markup, so a record field can never smuggle elements in. */

export type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  append(node, ...children);
  return node;
}

export function append(node: HTMLElement, ...children: Child[]): void {
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** "field_name" -> "field name" for labels. */
export function labelize(name: string): string {
  return name.replace(/_/g, " ");
}

export function definitionRow(name: string, value: unknown): HTMLElement {
  return el(
    "div",
    { class: "def-row" },
    el("span", { class: "def-name" }, labelize(name)),
    el("span", { class: "def-value" }, value === null || value === undefined ? "" : String(value)),
  );
}
