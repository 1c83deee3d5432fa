/** Stub API and wire-shaped fixtures for the view tests.
 *
 * Fixture shapes copy what the backend actually serves each role, so a
 * leak check against this DOM means something: an identity token that
 * shows up here would show up in production too.
 */

import { ConsoleApi, Parts, TransitionExtras, WireRecord } from "../src/api";

export interface TicketFixtureOptions {
  ticketId?: number;
  kind?: string;
  state?: string;
  iNumber?: string;
  alias?: string;
  notes?: string | null;
  mapRef?: string | null;
  redacted?: boolean;
  identity?: Record<string, unknown> | null;
  chat?: Array<{ author_id: string; role: string; text: string; ts: string }>;
  history?: Array<{ state: string; actor_id: string; role: string; ts: string }>;
}

export function ticketFixture(options: TicketFixtureOptions = {}): Parts {
  const fields: Record<string, unknown> = {
    ticket_id: options.ticketId ?? 1,
    kind: options.kind ?? "installation",
    state: options.state ?? "Requested",
    i_number: options.iNumber ?? "I-0001",
    alias: options.alias ?? "Quercia",
    history: options.history ?? [
      { state: "Requested", actor_id: "hos-1", role: "HOS", ts: "2025-01-06T09:00:00+00:00" },
    ],
    chat: options.chat ?? [],
  };
  if (!options.redacted) {
    fields.notes = options.notes ?? null;
    fields.map_ref = options.mapRef ?? null;
  }
  const parts: WireRecord[] = [{ type: "ticket", fields }];
  if (options.identity) {
    parts.push({ type: "subject_identity", fields: options.identity });
  }
  return { parts };
}

export const IDENTITY_FIELDS = {
  first_name: "Maria",
  last_name: "Rossi",
  age: 74,
  gender: "f",
  address: "Via Roma 1, Milano",
  contacts: [{ name: "Luca Rossi", phone: "+39 333 1234567" }],
  general_notes: "prefers morning visits",
  apartment_map: "two rooms, sensor by the door",
};

/** Substrings that must never reach a monitoring-side DOM. */
export const IDENTITY_NEEDLES = [
  "Maria",
  "Rossi",
  "Via Roma",
  "+39 333 1234567",
  "Luca",
  "morning visits",
  "sensor by the door",
];

export function installationFixture(overrides: Record<string, unknown> = {}): WireRecord {
  return {
    type: "installation_status",
    fields: {
      i_number: "I-0001",
      alias: "Quercia",
      pid: "ab".repeat(36),
      ticket_state: "Closed",
      bound: true,
      records_held: 12,
      unsynced: 3,
      ...overrides,
    },
  };
}

export class StubApi implements ConsoleApi {
  role: string | null = null;
  onAuthFailure: ((status: number) => void) | null = null;

  tickets: Parts[] = [];
  subjects: Parts[] = [];
  installations: WireRecord[] = [];
  dashboardBody: Parts = { parts: [] };

  calls: Array<{ method: string; args: unknown[] }> = [];
  loginError: Error | null = null;
  enrollResult: WireRecord | Error = { type: "enrollment_receipt", fields: {} };
  transitionResult: WireRecord | Error = { type: "ticket", fields: {} };
  chatResult: WireRecord | Error = { type: "ticket", fields: {} };
  interventionResult: WireRecord | Error = { type: "ticket", fields: {} };

  private log(method: string, ...args: unknown[]): void {
    this.calls.push({ method, args });
  }

  called(method: string): Array<{ method: string; args: unknown[] }> {
    return this.calls.filter((c) => c.method === method);
  }

  async login(credential: string, entityId: string, role: string): Promise<void> {
    this.log("login", credential, entityId, role);
    if (this.loginError) throw this.loginError;
    this.role = role;
  }

  logout(): void {
    this.role = null;
  }

  async listSubjects(): Promise<{ subjects: Parts[] }> {
    this.log("listSubjects");
    return { subjects: this.subjects };
  }

  async enroll(identity: unknown, cohort: string): Promise<WireRecord> {
    this.log("enroll", identity, cohort);
    if (this.enrollResult instanceof Error) throw this.enrollResult;
    return this.enrollResult;
  }

  async dashboard(pid: string): Promise<Parts> {
    this.log("dashboard", pid);
    return this.dashboardBody;
  }

  async listTickets(): Promise<{ tickets: Parts[] }> {
    this.log("listTickets");
    return { tickets: this.tickets };
  }

  async transition(ticketId: number, verb: string, extras?: TransitionExtras): Promise<WireRecord> {
    this.log("transition", ticketId, verb, extras);
    if (this.transitionResult instanceof Error) throw this.transitionResult;
    return this.transitionResult;
  }

  async chat(ticketId: number, text: string): Promise<WireRecord> {
    this.log("chat", ticketId, text);
    if (this.chatResult instanceof Error) throw this.chatResult;
    return this.chatResult;
  }

  async openIntervention(iNumber: string, description: string): Promise<WireRecord> {
    this.log("openIntervention", iNumber, description);
    if (this.interventionResult instanceof Error) throw this.interventionResult;
    return this.interventionResult;
  }

  async listInstallations(): Promise<{ installations: WireRecord[] }> {
    this.log("listInstallations");
    return { installations: this.installations };
  }
}

/** Wait for queued promise callbacks (the views fire-and-forget clicks). */
export async function settle(): Promise<void> {
  for (let i = 0; i < 5; i += 1) await Promise.resolve();
}

export function click(node: Element | null): void {
  if (!node) throw new Error("expected a node to click");
  node.dispatchEvent(new Event("click", { bubbles: true }));
}

export function submit(form: Element | null): void {
  if (!form) throw new Error("expected a form to submit");
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function setValue(input: Element | null, value: string): void {
  if (!input) throw new Error("expected an input");
  (input as HTMLInputElement).value = value;
}
