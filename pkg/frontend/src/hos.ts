/**
 * Coordinator (HOS) views: subject directory, enrollment form and the
 * per-subject dashboard.
 *
 * The dashboard draws whatever the backend computed and nothing more; the
 * outside-minutes chart is bars over the served daily rows, with no math
 * done here beyond scaling pixels.
 */

import { ApiError, ConsoleApi, Parts, WireRecord } from "./api.js";
import { clear, definitionRow, el } from "./render.js";

export const COHORTS = ["mci_neurodegenerative", "mci_other"] as const;

const AGE_MIN = 18;
const AGE_MAX = 120;
const GENDERS = new Set(["f", "female", "m", "male", "other"]);

export interface ContactDraft {
  name: string;
  phone: string;
}

export interface IdentityDraft {
  first_name: string;
  last_name: string;
  age: string;
  gender: string;
  address: string;
  contacts: ContactDraft[];
  general_notes: string;
  apartment_map: string;
}

/** Client-side mirror of the backend identity checks, so obvious mistakes
 * never leave the browser. The backend remains the authority. */
export function identityIssues(draft: IdentityDraft): string[] {
  const issues: string[] = [];
  for (const name of ["first_name", "last_name", "address"] as const) {
    if (!draft[name].trim()) issues.push(`${name.replace(/_/g, " ")} is required`);
  }
  const age = Number(draft.age);
  if (!Number.isInteger(age) || draft.age.trim() === "") {
    issues.push("age must be a whole number");
  } else if (age < AGE_MIN || age > AGE_MAX) {
    issues.push(`age must be between ${AGE_MIN} and ${AGE_MAX}`);
  }
  if (!GENDERS.has(draft.gender.trim().toLowerCase())) {
    issues.push("gender must be F, M or other");
  }
  const contacts = draft.contacts.filter((c) => c.name.trim() && c.phone.trim());
  if (contacts.length === 0) {
    issues.push("at least one contact with name and phone is required");
  }
  return issues;
}

export class EnrollView {
  readonly root: HTMLElement;
  private readonly status: HTMLElement;
  private readonly inputs: Record<string, HTMLInputElement> = {};
  private readonly gender: HTMLSelectElement;
  private readonly cohort: HTMLSelectElement;

  constructor(private readonly api: ConsoleApi) {
    this.status = el("div", { class: "view-status" });
    const form = el("form", { class: "enroll-form" });
    for (const name of [
      "first_name",
      "last_name",
      "age",
      "address",
      "contact_name",
      "contact_phone",
      "general_notes",
      "apartment_map",
    ]) {
      const input = el("input", { type: "text", name, placeholder: name.replace(/_/g, " ") });
      this.inputs[name] = input;
      form.append(el("label", { class: "form-row" }, name.replace(/_/g, " "), input));
    }
    this.gender = el("select", { name: "gender" });
    for (const value of ["F", "M", "other"]) {
      this.gender.append(el("option", { value }, value));
    }
    form.append(el("label", { class: "form-row" }, "gender", this.gender));
    this.cohort = el("select", { name: "cohort" });
    for (const value of COHORTS) {
      this.cohort.append(el("option", { value }, value.replace(/_/g, " ")));
    }
    form.append(el("label", { class: "form-row" }, "cohort", this.cohort));
    const submit = el("button", { type: "submit", class: "enroll-submit" }, "enroll");
    form.append(submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    this.root = el("section", { class: "enroll-view" }, el("h2", {}, "enroll subject"), this.status, form);
  }

  draft(): IdentityDraft {
    return {
      first_name: this.inputs.first_name.value,
      last_name: this.inputs.last_name.value,
      age: this.inputs.age.value,
      gender: this.gender.value,
      address: this.inputs.address.value,
      contacts: [{ name: this.inputs.contact_name.value, phone: this.inputs.contact_phone.value }],
      general_notes: this.inputs.general_notes.value,
      apartment_map: this.inputs.apartment_map.value,
    };
  }

  async submit(): Promise<void> {
    const draft = this.draft();
    const issues = identityIssues(draft);
    if (issues.length > 0) {
      this.setStatus(issues.join("; "), "error-banner");
      return;
    }
    const identity: Record<string, unknown> = {
      first_name: draft.first_name.trim(),
      last_name: draft.last_name.trim(),
      age: Number(draft.age),
      gender: draft.gender,
      address: draft.address.trim(),
      contacts: draft.contacts.filter((c) => c.name.trim() && c.phone.trim()),
      general_notes: draft.general_notes,
    };
    if (draft.apartment_map.trim()) identity.apartment_map = draft.apartment_map.trim();
    try {
      const receipt = await this.api.enroll(identity, this.cohort.value);
      const alias = String(receipt.fields.alias ?? "");
      this.setStatus(`enrolled; alias ${alias}, ticket #${receipt.fields.ticket_id}`, "success-banner");
    } catch (error) {
      if (error instanceof ApiError) {
        this.setStatus(error.message, "error-banner");
        return;
      }
      throw error;
    }
  }

  private setStatus(text: string, cls: string): void {
    clear(this.status);
    this.status.append(el("div", { class: cls }, text));
  }
}

export class SubjectsView {
  readonly root: HTMLElement;
  private readonly list: HTMLElement;

  constructor(
    private readonly api: ConsoleApi,
    private readonly onDashboard: (pid: string) => void,
  ) {
    this.list = el("div", { class: "subject-list" });
    this.root = el("section", { class: "subjects-view" }, el("h2", {}, "subjects"), this.list);
  }

  async load(): Promise<void> {
    const body = await this.api.listSubjects();
    clear(this.list);
    for (const subject of body.subjects) {
      this.list.append(this.row(subject));
    }
  }

  private row(subject: Parts): HTMLElement {
    const identity = subject.parts.find((p) => p.type === "subject_identity");
    const ref = subject.parts.find((p) => p.type === "monitor_ref");
    const row = el("div", { class: "subject-row" });
    if (identity) {
      row.append(
        el(
          "span",
          { class: "subject-name" },
          `${identity.fields.first_name ?? ""} ${identity.fields.last_name ?? ""}`,
        ),
      );
    }
    if (ref) {
      row.append(el("span", { class: "subject-alias" }, String(ref.fields.alias ?? "")));
      row.append(el("span", { class: "subject-i-number" }, String(ref.fields.i_number ?? "")));
      const pid = String(ref.fields.pid ?? "");
      const open = el("button", { type: "button", class: "open-dashboard" }, "dashboard");
      open.addEventListener("click", () => this.onDashboard(pid));
      row.append(open);
    }
    return row;
  }
}

interface DailyRow {
  date: string;
  minutes_outside: number;
  outing_count: number;
}

function outsideMinutesChart(rows: DailyRow[]): HTMLElement {
  const chart = el("div", { class: "outside-minutes-chart" });
  for (const row of rows) {
    const bar = el("div", {
      class: "chart-bar",
      style: `height:${Math.min(Number(row.minutes_outside), 600) / 4}px`,
      title: `${row.date}: ${row.minutes_outside} min outside, ${row.outing_count} outings`,
    });
    chart.append(bar);
  }
  return chart;
}

function mobilitySection(report: WireRecord): HTMLElement {
  const fields = report.fields;
  const section = el("div", { class: "mobility-report" }, el("h3", {}, "mobility report"));
  const window = fields.window as { start?: string; end?: string } | undefined;
  if (window) section.append(definitionRow("window", `${window.start} to ${window.end}`));
  if (Array.isArray(fields.daily_outside)) {
    section.append(outsideMinutesChart(fields.daily_outside as DailyRow[]));
  }
  const changes = fields.place_changes as Record<string, unknown> | undefined;
  if (changes) {
    for (const [name, value] of Object.entries(changes)) {
      section.append(definitionRow(name, value));
    }
  }
  if (Array.isArray(fields.route_deviations)) {
    const list = el("ul", { class: "route-deviations" });
    for (const row of fields.route_deviations as Array<Record<string, unknown>>) {
      list.append(
        el(
          "li",
          { class: row.flagged ? "deviation flagged" : "deviation" },
          `place ${row.place} on ${row.date}: ratio ${row.duration_ratio}${row.flagged ? " (flagged)" : ""}`,
        ),
      );
    }
    section.append(list);
  }
  if (Array.isArray(fields.wandering_episodes)) {
    const list = el("ul", { class: "wandering-episodes" });
    for (const row of fields.wandering_episodes as Array<Record<string, unknown>>) {
      list.append(
        el("li", {}, `${row.date}: ${row.duration_minutes} min, tortuosity ${row.tortuosity}`),
      );
    }
    section.append(list);
  }
  return section;
}

export class DashboardView {
  readonly root: HTMLElement;
  private readonly body: HTMLElement;

  constructor(private readonly api: ConsoleApi) {
    this.body = el("div", { class: "dashboard-body" });
    this.root = el("section", { class: "dashboard-view" }, el("h2", {}, "dashboard"), this.body);
  }

  async load(pid: string): Promise<void> {
    const body = await this.api.dashboard(pid);
    clear(this.body);
    this.render(body);
  }

  render(body: Parts): void {
    const profile = body.parts.find((p) => p.type === "subject_profile");
    if (profile) {
      const block = el("div", { class: "subject-profile" });
      for (const [name, value] of Object.entries(profile.fields)) {
        block.append(definitionRow(name, value));
      }
      this.body.append(block);
    }
    for (const part of body.parts) {
      if (part.type === "analysis_results") {
        this.body.append(
          el(
            "div",
            { class: "analysis-result" },
            el("h3", {}, "analysis"),
            el("p", {}, String(part.fields.summary ?? "")),
            el("p", { class: "generated-at" }, String(part.fields.generated_at ?? "")),
          ),
        );
      } else if (part.type === "mobility_report") {
        this.body.append(mobilitySection(part));
      }
    }
  }
}
