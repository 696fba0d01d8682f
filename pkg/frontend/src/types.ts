// Payload shapes of the checkout service API. Prices arrive both as integer
// minor units and as preformatted display strings; the console renders the
// strings verbatim and never does money arithmetic.

export interface CartLine {
  line_no: number;
  item_id: number;
  name: string;
  unit_price: number;
  unit_price_display: string;
  source: "model" | "override";
  confidence: number | null;
}

export interface SessionState {
  session_id: string;
  state: "open" | "closed";
  lines: CartLine[];
  total: number;
  total_display: string;
  currency: string;
}

export interface IdentifyResult {
  top1: number;
  confidence: number;
  top5: [number, number][];
  accepted: boolean;
}

export interface SubmitResponse {
  result: IdentifyResult;
  cart: SessionState;
}

export interface ReceiptInfo {
  receipt_no: number;
  session_id: string;
  lines: { name: string; unit_price: number }[];
  total: number;
  total_display: string;
  currency: string;
  timestamp: number;
}

export interface CheckoutResponse {
  receipt: ReceiptInfo;
  receipt_text: string;
}

export interface CatalogItem {
  id: number;
  dir: string;
  name: string;
  unit_price: number;
}

export interface Catalog {
  currency: string;
  items: CatalogItem[];
}

/** Domain error from the service, e.g. NoObject, SessionClosed, EmptyCart. */
export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}
