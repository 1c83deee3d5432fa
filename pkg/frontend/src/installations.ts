/**
 * Monitoring team (IMT) view: installation health without identity.
 *
 * Rows show alias, PID, installation number and gateway health, because
 * that is everything the backend serves this role. The open-intervention
 * form posts and then waits for the server's answer.
 */

import { ApiError, ConsoleApi, WireRecord } from "./api.js";
import { clear, definitionRow, el } from "./render.js";

export class InstallationsView {
  readonly root: HTMLElement;
  private readonly status: HTMLElement;
  private readonly list: HTMLElement;

  constructor(private readonly api: ConsoleApi) {
    this.status = el("div", { class: "view-status" });
    this.list = el("div", { class: "installation-list" });
    this.root = el(
      "section",
      { class: "installations-view" },
      el("h2", {}, "installations"),
      this.status,
      this.list,
    );
  }

  async load(): Promise<void> {
    const body = await this.api.listInstallations();
    clear(this.list);
    for (const record of body.installations) {
      this.list.append(this.row(record));
    }
  }

  private row(record: WireRecord): HTMLElement {
    const fields = record.fields;
    const row = el(
      "div",
      { class: "installation-row", "data-i-number": String(fields.i_number ?? "") },
      el("span", { class: "installation-alias" }, String(fields.alias ?? "")),
      el("span", { class: "installation-i-number" }, String(fields.i_number ?? "")),
      el("span", { class: "installation-pid" }, String(fields.pid ?? "")),
      definitionRow("ticket state", fields.ticket_state),
      definitionRow("gateway bound", fields.bound),
      definitionRow("records held", fields.records_held),
      definitionRow("unsynced", fields.unsynced),
    );
    const description = el("input", {
      type: "text",
      class: "intervention-description",
      placeholder: "problem description",
    });
    const open = el("button", { type: "button", class: "open-intervention" }, "open intervention");
    open.addEventListener("click", () => {
      void this.openIntervention(String(fields.i_number ?? ""), description.value);
    });
    row.append(description, open);
    return row;
  }

  private async openIntervention(iNumber: string, description: string): Promise<void> {
    try {
      const ticket = await this.api.openIntervention(iNumber, description);
      this.setStatus(`intervention ticket #${ticket.fields.ticket_id} opened`, "success-banner");
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
