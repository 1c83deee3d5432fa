/**
 * Console shell: login, navigation, and the active view.
 *
 * A rejected or expired token anywhere sends the operator back to the
 * login form; nothing about the old session survives because the token
 * only ever existed inside the API client.
 */

import { ApiError, ConsoleApi } from "./api.js";
import { DashboardView, EnrollView, SubjectsView } from "./hos.js";
import { InstallationsView } from "./installations.js";
import { clear, el } from "./render.js";
import { navigableViews } from "./session.js";
import { TicketsView } from "./tickets.js";

export class App {
  private readonly main: HTMLElement;
  private readonly nav: HTMLElement;
  private readonly banner: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly api: ConsoleApi,
  ) {
    this.banner = el("div", { class: "app-banner" });
    this.nav = el("nav", { class: "app-nav" });
    this.main = el("main", { class: "app-main" });
    clear(root);
    root.append(this.banner, this.nav, this.main);
    this.api.onAuthFailure = () => this.showLogin("session ended; sign in again");
  }

  start(): void {
    this.showLogin();
  }

  showLogin(notice?: string): void {
    this.api.logout();
    clear(this.nav);
    clear(this.main);
    this.setBanner(notice ?? "", "error-banner");

    const credential = el("input", { type: "password", name: "credential", placeholder: "credential" });
    const entityId = el("input", { type: "text", name: "entity_id", placeholder: "operator id" });
    const role = el("select", { name: "role" });
    for (const value of ["HOS", "IIT", "IMT"]) role.append(el("option", { value }, value));
    const form = el(
      "form",
      { class: "login-form" },
      el("h2", {}, "sign in"),
      el("label", { class: "form-row" }, "credential", credential),
      el("label", { class: "form-row" }, "operator id", entityId),
      el("label", { class: "form-row" }, "role", role),
      el("button", { type: "submit" }, "sign in"),
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.handleLogin(credential.value, entityId.value, role.value);
    });
    this.main.append(el("section", { class: "login-view" }, form));
  }

  private async handleLogin(credential: string, entityId: string, role: string): Promise<void> {
    try {
      await this.api.login(credential, entityId, role);
    } catch (error) {
      if (error instanceof ApiError) {
        this.setBanner(error.message, "error-banner");
        return;
      }
      throw error;
    }
    this.setBanner(`signed in as ${entityId} (${role})`, "success-banner");
    this.buildNav();
    const views = navigableViews(this.api.role);
    if (views.length > 0) await this.showView(views[0]);
  }

  private buildNav(): void {
    clear(this.nav);
    for (const name of navigableViews(this.api.role)) {
      const link = el("button", { type: "button", class: "nav-link", "data-view": name }, name);
      link.addEventListener("click", () => void this.showView(name));
      this.nav.append(link);
    }
    const out = el("button", { type: "button", class: "nav-logout" }, "sign out");
    out.addEventListener("click", () => this.showLogin());
    this.nav.append(out);
  }

  async showView(name: string): Promise<void> {
    clear(this.main);
    this.setBanner("", "");
    try {
      if (name === "subjects") {
        const view = new SubjectsView(this.api, (pid) => void this.showDashboard(pid));
        this.main.append(view.root);
        await view.load();
      } else if (name === "enroll") {
        this.main.append(new EnrollView(this.api).root);
      } else if (name === "tickets") {
        const view = new TicketsView(this.api);
        this.main.append(view.root);
        await view.load();
      } else if (name === "installations") {
        const view = new InstallationsView(this.api);
        this.main.append(view.root);
        await view.load();
      }
    } catch (error) {
      if (error instanceof ApiError) {
        this.setBanner(error.message, "error-banner");
        return;
      }
      throw error;
    }
  }

  private async showDashboard(pid: string): Promise<void> {
    clear(this.main);
    const view = new DashboardView(this.api);
    this.main.append(view.root);
    try {
      await view.load(pid);
    } catch (error) {
      if (error instanceof ApiError) {
        this.setBanner(error.message, "error-banner");
        return;
      }
      throw error;
    }
  }

  private setBanner(text: string, cls: string): void {
    clear(this.banner);
    if (text) this.banner.append(el("div", { class: cls }, text));
  }
}
