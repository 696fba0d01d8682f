import {
  ApiError,
  Catalog,
  CheckoutResponse,
  IdentifyResult,
  SessionState,
  SubmitResponse,
} from "./types.js";

/** The slice of ApiClient the console uses (structural, so tests can stub it). */
export interface ConsoleClient {
  catalog(): Promise<Catalog>;
  openSession(): Promise<string>;
  getSession(sessionId: string): Promise<SessionState>;
  submitItem(
    sessionId: string,
    image: Blob | ArrayBuffer,
    contentType?: "image/png" | "image/jpeg",
  ): Promise<SubmitResponse>;
  overrideLine(sessionId: string, itemId: number, lineNo?: number): Promise<{ cart: SessionState }>;
  checkout(sessionId: string): Promise<CheckoutResponse>;
}

interface ViewState {
  session: SessionState | null;
  catalog: Catalog | null;
  lastResult: IdentifyResult | null;
  receiptText: string | null;
  busy: boolean;
  starting: boolean;
  banner: { kind: "error" | "info"; text: string } | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Single-operator checkout console over one session at a time. */
export class ConsoleApp {
  readonly state: ViewState = {
    session: null,
    catalog: null,
    lastResult: null,
    receiptText: null,
    busy: false,
    starting: false,
    banner: null,
  };

  private fileInput!: HTMLInputElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ConsoleClient,
  ) {
    this.render();
  }

  // -- flows ---------------------------------------------------------------

  /** POST /sessions then fetch the empty cart; guarded against double clicks. */
  async startSession(): Promise<void> {
    if (this.state.starting) return;
    this.state.starting = true;
    this.state.banner = null;
    this.render();
    try {
      const sid = await this.client.openSession();
      this.state.session = await this.client.getSession(sid);
      this.state.lastResult = null;
      this.state.receiptText = null;
      if (!this.state.catalog) {
        this.state.catalog = await this.client.catalog();
      }
    } catch (err) {
      this.state.banner = {
        kind: "error",
        text: `Could not start a session: ${describe(err)}. Check the service and retry.`,
      };
    } finally {
      this.state.starting = false;
      this.render();
    }
  }

  /** Upload one item image; the response cart is the new truth. */
  async submitImage(image: Blob | ArrayBuffer, contentType: "image/png" | "image/jpeg"): Promise<void> {
    const session = this.state.session;
    if (!session || session.state !== "open" || this.state.busy) return;
    this.state.busy = true;
    this.state.banner = null;
    this.render();
    try {
      const response = await this.client.submitItem(session.session_id, image, contentType);
      this.state.session = response.cart;
      this.state.lastResult = response.result;
      if (!response.result.accepted) {
        this.state.banner = {
          kind: "info",
          text: "Model is not confident. Pick the item below or rescan.",
        };
      }
    } catch (err) {
      if (err instanceof ApiError && err.code === "NoObject") {
        this.state.banner = { kind: "info", text: "No object detected on the belt." };
      } else {
        this.state.banner = { kind: "error", text: describe(err) };
      }
    } finally {
      this.state.busy = false;
      this.render();
    }
  }

  /** Operator resolves a rejected identification from the top-5 list. */
  async pickItem(itemId: number): Promise<void> {
    const session = this.state.session;
    if (!session || session.state !== "open" || this.state.busy) return;
    this.state.busy = true;
    this.render();
    try {
      const response = await this.client.overrideLine(session.session_id, itemId);
      this.state.session = response.cart;
      this.state.lastResult = null;
      this.state.banner = null;
    } catch (err) {
      this.state.banner = { kind: "error", text: describe(err) };
    } finally {
      this.state.busy = false;
      this.render();
    }
  }

  async checkoutFlow(): Promise<void> {
    const session = this.state.session;
    if (!session || session.state !== "open" || session.lines.length === 0 || this.state.busy) return;
    this.state.busy = true;
    this.render();
    try {
      const response = await this.client.checkout(session.session_id);
      this.state.session = await this.client.getSession(session.session_id);
      this.state.receiptText = response.receipt_text;
      this.state.lastResult = null;
      this.state.banner = null;
    } catch (err) {
      this.state.banner = { kind: "error", text: describe(err) };
    } finally {
      this.state.busy = false;
      this.render();
    }
  }

  // -- rendering -------------------------------------------------------------

  render(): void {
    const { session, lastResult, receiptText, busy, starting, banner } = this.state;
    this.root.textContent = "";

    const header = el("header");
    header.append(el("h1", "", "Checkout console"));
    const startBtn = el("button", "start", session ? "New session" : "Start session");
    startBtn.id = "start-session";
    startBtn.disabled = starting || busy;
    startBtn.addEventListener("click", () => void this.startSession());
    header.append(startBtn);
    this.root.append(header);

    if (banner) {
      const div = el("div", `banner ${banner.kind}`, banner.text);
      div.id = "banner";
      this.root.append(div);
    }

    if (!session) {
      this.root.append(el("p", "hint", "Start a session to begin scanning items."));
      return;
    }

    const info = el("div", "session-info");
    info.append(el("span", "session-id", `session ${session.session_id.slice(0, 8)}`));
    const stateBadge = el("span", `state ${session.state}`, session.state);
    stateBadge.id = "session-state";
    info.append(stateBadge);
    this.root.append(info);

    this.root.append(this.renderCart(session));
    this.root.append(this.renderResult(lastResult));
    this.root.append(this.renderControls(session, busy));

    if (receiptText) {
      const wrap = el("section", "receipt");
      wrap.append(el("h2", "", "Receipt"));
      const pre = el("pre", "receipt-text", receiptText);
      pre.id = "receipt-text";
      wrap.append(pre);
      const printBtn = el("button", "", "Print");
      printBtn.id = "print-receipt";
      printBtn.addEventListener("click", () => {
        if (typeof window.print === "function") window.print();
      });
      wrap.append(printBtn);
      this.root.append(wrap);
    }
  }

  private renderCart(session: SessionState): HTMLElement {
    const section = el("section", "cart");
    const table = el("table");
    table.id = "cart-table";
    const head = el("tr");
    for (const title of ["#", "Item", "Price", "Source"]) head.append(el("th", "", title));
    table.append(head);
    for (const line of session.lines) {
      const tr = el("tr", "cart-line");
      tr.append(el("td", "", String(line.line_no)));
      tr.append(el("td", "", line.name));
      tr.append(el("td", "price", line.unit_price_display));
      const badge =
        line.source === "model"
          ? `model ${(100 * (line.confidence ?? 0)).toFixed(0)}%`
          : "operator";
      tr.append(el("td", `badge ${line.source}`, badge));
      table.append(tr);
    }
    section.append(table);
    // total string comes from the service verbatim; no arithmetic here
    const total = el("div", "total");
    total.id = "cart-total";
    total.textContent = `TOTAL ${session.total_display}`;
    section.append(total);
    return section;
  }

  private renderResult(result: IdentifyResult | null): HTMLElement {
    const section = el("section", "result");
    section.id = "identify-result";
    if (!result) return section;
    if (result.accepted) {
      section.append(
        el("div", "accepted", `Added item ${result.top1} at ${(100 * result.confidence).toFixed(0)}% confidence`),
      );
      return section;
    }
    section.append(el("div", "rejected", "Not confident. Select the item:"));
    const picker = el("div", "picker");
    picker.id = "top5-picker";
    for (const [itemId, prob] of result.top5) {
      const name = this.itemName(itemId);
      const btn = el("button", "pick", `${name} (${(100 * prob).toFixed(1)}%)`);
      btn.dataset.itemId = String(itemId);
      btn.addEventListener("click", () => void this.pickItem(itemId));
      picker.append(btn);
    }
    section.append(picker);
    return section;
  }

  private renderControls(session: SessionState, busy: boolean): HTMLElement {
    const section = el("section", "controls");
    const closed = session.state !== "open";

    this.fileInput = el("input") as HTMLInputElement;
    this.fileInput.type = "file";
    this.fileInput.accept = "image/png,image/jpeg";
    this.fileInput.id = "item-file";
    this.fileInput.disabled = busy || closed;
    this.fileInput.addEventListener("change", () => void this.onFilePicked());
    section.append(this.fileInput);

    // camera capture is optional; only offered where the browser supports it
    // (the DOM types promise getUserMedia, test environments do not)
    const mediaDevices =
      typeof navigator !== "undefined"
        ? (navigator as { mediaDevices?: MediaDevices }).mediaDevices
        : undefined;
    if (mediaDevices && typeof mediaDevices.getUserMedia === "function") {
      const camBtn = el("button", "", "Use camera");
      camBtn.id = "camera-toggle";
      camBtn.disabled = busy || closed;
      camBtn.addEventListener("click", () => void this.captureFromCamera(section));
      section.append(camBtn);
    }

    const checkoutBtn = el("button", "checkout", "Check out");
    checkoutBtn.id = "checkout";
    checkoutBtn.disabled = busy || closed || session.lines.length === 0;
    checkoutBtn.addEventListener("click", () => void this.checkoutFlow());
    section.append(checkoutBtn);
    return section;
  }

  private async onFilePicked(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) return;
    const type = file.type === "image/jpeg" ? "image/jpeg" : "image/png";
    await this.submitImage(file, type);
  }

  private async captureFromCamera(host: HTMLElement): Promise<void> {
    try {
      const stream = await navigator.mediaDevices.getUserMedia({ video: true });
      const video = el("video");
      video.autoplay = true;
      video.srcObject = stream;
      const shoot = el("button", "", "Capture");
      host.append(video, shoot);
      shoot.addEventListener("click", () => {
        const canvas = el("canvas");
        canvas.width = video.videoWidth || 640;
        canvas.height = video.videoHeight || 480;
        canvas.getContext("2d")?.drawImage(video, 0, 0);
        canvas.toBlob((blob) => {
          stream.getTracks().forEach((t) => t.stop());
          video.remove();
          shoot.remove();
          if (blob) void this.submitImage(blob, "image/png");
        }, "image/png");
      });
    } catch (err) {
      this.state.banner = { kind: "error", text: `Camera unavailable: ${describe(err)}` };
      this.render();
    }
  }

  private itemName(itemId: number): string {
    const item = this.state.catalog?.items.find((i) => i.id === itemId);
    return item ? item.name : `item ${itemId}`;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
