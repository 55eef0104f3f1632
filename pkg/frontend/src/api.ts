// Typed client for the brickforge HTTP service. Every displayed number in
// the UI comes from these responses; the client computes nothing itself.

export type Side = "front" | "right" | "top";
export type Method = "extrude" | "lathe" | "triplanar";
export type PostOp = "smooth" | "lattice" | "scale" | "merge";

export interface ProfileSummary {
  side: Side;
  cols: number;
  rows: number;
  cells: string; // bitmask text format
  warnings: string[];
}

export interface StageInfo {
  stage: number;
  warnings: string[];
}

export interface MeshPayload {
  vertices: number[]; // flat xyz triples, millimeters
  triangles: number[]; // flat index triples
  warnings: string[];
}

export interface AnalyzeReport {
  analyze: {
    volume_mm3: number;
    surface_area_mm2: number;
    watertight: boolean;
    shell_count: number;
    euler_characteristic: number;
    bbox_min: number[];
    bbox_max: number[];
  };
  balance: {
    center_of_mass: number[];
    support_polygon: number[][];
    stable: boolean;
    margin_mm: number;
  } | null;
  warnings: string[];
}

export interface SessionState {
  id: string;
  profiles: Record<string, { mask: string[]; warnings: string[] }>;
  mesh_stages: { op: string; params: Record<string, unknown> }[];
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public stage: string,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toServiceError(response: Response): Promise<ServiceError> {
  let stage = "service";
  let code = `http-${response.status}`;
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      stage = body.stage ?? stage;
      code = body.code ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the defaults
  }
  return new ServiceError(response.status, stage, code, message);
}

export class ServiceClient {
  constructor(private base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await toServiceError(response);
    return (await response.json()) as T;
  }

  createSession(): Promise<{ id: string }> {
    return this.json("/sessions", { method: "POST" });
  }

  getSession(sid: string): Promise<SessionState> {
    return this.json(`/sessions/${sid}`);
  }

  deleteSession(sid: string): Promise<void> {
    return fetch(`${this.base}/sessions/${sid}`, { method: "DELETE" }).then(async (r) => {
      if (!r.ok) throw await toServiceError(r);
    });
  }

  scan(sid: string, side: Side, image: Blob, filename = "scan.png"): Promise<ProfileSummary> {
    const form = new FormData();
    form.append("image", image, filename);
    form.append("side", side);
    return this.json(`/sessions/${sid}/scan`, { method: "POST", body: form });
  }

  putProfile(sid: string, side: Side, maskText: string): Promise<ProfileSummary> {
    return this.json(`/sessions/${sid}/profiles/${side}`, {
      method: "PUT",
      headers: { "Content-Type": "text/plain" },
      body: maskText,
    });
  }

  reconstruct(sid: string, method: Method, params: Record<string, unknown>): Promise<StageInfo> {
    return this.json(`/sessions/${sid}/reconstruct`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ method, params }),
    });
  }

  applyPost(sid: string, operation: PostOp, params: Record<string, unknown>): Promise<StageInfo> {
    return this.json(`/sessions/${sid}/post`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ operation, params }),
    });
  }

  meshJson(sid: string, stage: number): Promise<MeshPayload> {
    return this.json(`/sessions/${sid}/mesh/${stage}?format=json`);
  }

  async meshObj(sid: string, stage: number): Promise<Uint8Array> {
    const response = await fetch(`${this.base}/sessions/${sid}/mesh/${stage}?format=obj`);
    if (!response.ok) throw await toServiceError(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  analyze(sid: string, stage: number): Promise<AnalyzeReport> {
    return this.json(`/sessions/${sid}/analyze/${stage}`);
  }
}
