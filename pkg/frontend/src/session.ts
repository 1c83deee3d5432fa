/** Which console views each role may navigate. The backend enforces the
 * real policy; this list only shapes the navigation bar. */

export const VIEWS_BY_ROLE: Record<string, readonly string[]> = {
  HOS: ["subjects", "enroll"],
  IIT: ["tickets"],
  IMT: ["installations", "tickets"],
};

export function navigableViews(role: string | null): readonly string[] {
  if (role === null) return [];
  return VIEWS_BY_ROLE[role] ?? [];
}
