/**
 * JSON client for the tele-monitoring backend.
 *
 * The token lives in this object only; it is never written to storage, so
 * closing the tab ends the session. All policy is server-side: this client
 * forwards requests and surfaces the backend's error detail verbatim.
 */

export interface WireRecord {
  type: string;
  fields: Record<string, unknown>;
}

export interface Parts {
  parts: WireRecord[];
}

export interface TransitionExtras {
  notes?: string;
  map_ref?: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

/** The surface the views program against; tests substitute stubs. */
export interface ConsoleApi {
  readonly role: string | null;
  onAuthFailure: ((status: number) => void) | null;
  login(credential: string, entityId: string, role: string): Promise<void>;
  logout(): void;
  listSubjects(): Promise<{ subjects: Parts[] }>;
  enroll(identity: unknown, cohort: string): Promise<WireRecord>;
  dashboard(pid: string): Promise<Parts>;
  listTickets(): Promise<{ tickets: Parts[] }>;
  transition(ticketId: number, verb: string, extras?: TransitionExtras): Promise<WireRecord>;
  chat(ticketId: number, text: string): Promise<WireRecord>;
  openIntervention(iNumber: string, description: string): Promise<WireRecord>;
  listInstallations(): Promise<{ installations: WireRecord[] }>;
}

export class ApiClient implements ConsoleApi {
  private token: string | null = null;
  role: string | null = null;

  /** Called on 401/403 from any endpoint except login itself. */
  onAuthFailure: ((status: number) => void) | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  get authenticated(): boolean {
    return this.token !== null;
  }

  async login(credential: string, entityId: string, role: string): Promise<void> {
    const body = await this.request("POST", "/auth/token", {
      credential,
      entity_id: entityId,
      role,
    });
    this.token = String(body.token);
    this.role = String(body.role);
  }

  logout(): void {
    this.token = null;
    this.role = null;
  }

  listSubjects(): Promise<{ subjects: Parts[] }> {
    return this.request("GET", "/subjects");
  }

  enroll(identity: unknown, cohort: string): Promise<WireRecord> {
    return this.request("POST", "/subjects", { identity, cohort });
  }

  dashboard(pid: string): Promise<Parts> {
    return this.request("GET", `/subjects/${encodeURIComponent(pid)}/dashboard`);
  }

  listTickets(): Promise<{ tickets: Parts[] }> {
    return this.request("GET", "/tickets");
  }

  transition(ticketId: number, verb: string, extras: TransitionExtras = {}): Promise<WireRecord> {
    return this.request("POST", `/tickets/${ticketId}/transition`, { verb, ...extras });
  }

  chat(ticketId: number, text: string): Promise<WireRecord> {
    return this.request("POST", `/tickets/${ticketId}/chat`, { text });
  }

  openIntervention(iNumber: string, description: string): Promise<WireRecord> {
    return this.request("POST", "/tickets", { i_number: iNumber, description });
  }

  listInstallations(): Promise<{ installations: WireRecord[] }> {
    return this.request("GET", "/installations");
  }

  private async request(method: string, path: string, payload?: unknown): Promise<any> {
    const headers: Record<string, string> = {};
    if (payload !== undefined) headers["Content-Type"] = "application/json";
    if (this.token !== null) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: payload === undefined ? undefined : JSON.stringify(payload),
    });
    let body: any = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      if (
        (response.status === 401 || response.status === 403) &&
        path !== "/auth/token" &&
        this.onAuthFailure
      ) {
        this.onAuthFailure(response.status);
      }
      const detail =
        body && typeof body.detail === "string" ? body.detail : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return body;
  }
}
