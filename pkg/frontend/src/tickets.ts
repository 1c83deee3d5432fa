/**
 * Ticket list shared by the installer (IIT) and monitoring (IMT) sessions,
 * with the transition buttons and the chat panel.
 *
 * The card renders exactly the fields the backend returned: the monitoring
 * team's responses arrive without visit notes or identity, so those blocks
 * simply never exist in its DOM. Buttons mirror the backend state machine;
 * the server re-checks every press.
 */

import { ApiError, ConsoleApi, Parts, WireRecord } from "./api.js";
import { append, clear, definitionRow, el } from "./render.js";

export interface TicketAction {
  verb: string;
  role: string;
  label: string;
}

const PROTOCOLS: Record<string, Record<string, TicketAction>> = {
  installation: {
    Requested: { verb: "plan_visit", role: "IIT", label: "plan visit" },
    VisitPlanned: { verb: "prepare_infra", role: "IMT", label: "prepare infrastructure" },
    InfraReady: { verb: "install", role: "IIT", label: "install" },
    Installed: { verb: "verify_close", role: "IMT", label: "verify and close" },
  },
  intervention: {
    Opened: { verb: "notify_fixed", role: "IIT", label: "notify fixed" },
    FixNotified: { verb: "close", role: "IMT", label: "close intervention" },
  },
};

/** The one legal next step for this ticket, if it belongs to this role. */
export function actionsFor(kind: string, state: string, role: string): TicketAction[] {
  const action = PROTOCOLS[kind]?.[state];
  return action !== undefined && action.role === role ? [action] : [];
}

interface HistoryEntry {
  state: string;
  actor_id: string;
  role: string;
  ts: string;
}

interface ChatEntry {
  author_id: string;
  role: string;
  text: string;
  ts: string;
}

export interface TicketHandlers {
  onTransition(ticketId: number, verb: string, notes: string, mapRef: string): void;
  onChat(ticketId: number, text: string): void;
}

function identityBlock(identity: WireRecord): HTMLElement {
  const fields = identity.fields;
  const block = el("div", { class: "ticket-identity" });
  append(
    block,
    el("div", { class: "identity-name" }, `${fields.first_name ?? ""} ${fields.last_name ?? ""}`),
  );
  for (const name of ["address", "general_notes", "apartment_map"]) {
    if (name in fields && fields[name]) block.append(definitionRow(name, fields[name]));
  }
  if (Array.isArray(fields.contacts)) {
    for (const contact of fields.contacts as Array<Record<string, unknown>>) {
      block.append(definitionRow("contact", `${contact.name} ${contact.phone}`));
    }
  }
  return block;
}

function chatPanel(
  ticketId: number,
  entries: ChatEntry[],
  handlers: TicketHandlers | null,
): HTMLElement {
  const panel = el("div", { class: "chat-panel" }, el("h4", {}, "chat"));
  const list = el("ul", { class: "chat-list" });
  for (const entry of entries) {
    list.append(
      el(
        "li",
        { class: "chat-entry" },
        el("span", { class: "chat-author" }, `${entry.author_id} (${entry.role})`),
        el("span", { class: "chat-text" }, entry.text),
      ),
    );
  }
  panel.append(list);
  if (handlers) {
    const input = el("input", { class: "chat-input", type: "text" });
    const send = el("button", { class: "chat-send", type: "button" }, "send");
    send.addEventListener("click", () => handlers.onChat(ticketId, input.value));
    panel.append(el("div", { class: "chat-compose" }, input, send));
  }
  return panel;
}

export function renderTicketCard(
  ticket: Parts,
  role: string,
  handlers: TicketHandlers | null,
): HTMLElement {
  const record = ticket.parts.find((p) => p.type === "ticket");
  if (!record) return el("div", { class: "ticket-card" }, "malformed ticket");
  const fields = record.fields;
  const ticketId = Number(fields.ticket_id);

  const card = el(
    "div",
    { class: "ticket-card", "data-ticket-id": String(ticketId), "data-state": String(fields.state) },
    el(
      "div",
      { class: "ticket-head" },
      el("span", { class: "ticket-title" }, `ticket #${ticketId} (${fields.kind})`),
      el("span", { class: "ticket-state" }, String(fields.state)),
    ),
    definitionRow("i_number", fields.i_number),
    definitionRow("alias", fields.alias),
  );
  for (const name of ["notes", "map_ref"]) {
    if (name in fields && fields[name]) card.append(definitionRow(name, fields[name]));
  }

  const identity = ticket.parts.find((p) => p.type === "subject_identity");
  if (identity) card.append(identityBlock(identity));

  const history = el("ol", { class: "ticket-history" });
  for (const entry of (fields.history as HistoryEntry[]) ?? []) {
    history.append(el("li", {}, `${entry.state} by ${entry.actor_id} at ${entry.ts}`));
  }
  card.append(history);

  const actions = el("div", { class: "ticket-actions" });
  for (const action of actionsFor(String(fields.kind), String(fields.state), role)) {
    const button = el(
      "button",
      { class: "ticket-action", type: "button", "data-verb": action.verb },
      action.label,
    );
    let notes: HTMLInputElement | null = null;
    let mapRef: HTMLInputElement | null = null;
    if (action.verb === "plan_visit") {
      notes = el("input", { class: "visit-notes", type: "text", placeholder: "visit notes" });
      mapRef = el("input", { class: "visit-map-ref", type: "text", placeholder: "map reference" });
      actions.append(notes, mapRef);
    }
    button.addEventListener("click", () => {
      handlers?.onTransition(ticketId, action.verb, notes?.value ?? "", mapRef?.value ?? "");
    });
    actions.append(button);
  }
  card.append(actions);

  card.append(chatPanel(ticketId, (fields.chat as ChatEntry[]) ?? [], handlers));
  return card;
}

export class TicketsView {
  readonly root: HTMLElement;
  private readonly status: HTMLElement;
  private readonly list: HTMLElement;

  constructor(private readonly api: ConsoleApi) {
    this.status = el("div", { class: "view-status" });
    this.list = el("div", { class: "ticket-list" });
    this.root = el("section", { class: "tickets-view" }, el("h2", {}, "tickets"), this.status, this.list);
  }

  async load(): Promise<void> {
    const body = await this.api.listTickets();
    clear(this.list);
    const role = this.api.role ?? "";
    const handlers: TicketHandlers = {
      onTransition: (ticketId, verb, notes, mapRef) => {
        void this.transition(ticketId, verb, notes, mapRef);
      },
      onChat: (ticketId, text) => {
        void this.sendChat(ticketId, text);
      },
    };
    for (const ticket of body.tickets) {
      this.list.append(renderTicketCard(ticket, role, handlers));
    }
  }

  /** Nothing changes on screen until the server has answered. */
  private async transition(
    ticketId: number,
    verb: string,
    notes: string,
    mapRef: string,
  ): Promise<void> {
    try {
      const extras: { notes?: string; map_ref?: string } = {};
      if (notes) extras.notes = notes;
      if (mapRef) extras.map_ref = mapRef;
      await this.api.transition(ticketId, verb, extras);
      this.setStatus("");
      await this.load();
    } catch (error) {
      this.showError(error);
    }
  }

  private async sendChat(ticketId: number, text: string): Promise<void> {
    try {
      await this.api.chat(ticketId, text);
      this.setStatus("");
      await this.load();
    } catch (error) {
      this.showError(error);
    }
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      this.setStatus(error.message);
    } else {
      throw error;
    }
  }

  private setStatus(text: string): void {
    clear(this.status);
    if (text) this.status.append(el("div", { class: "error-banner" }, text));
  }
}
