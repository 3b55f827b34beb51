import express, { Express, Request, Response } from "express";
import { z } from "zod";
import { MODEL_INFO, classifySentiment, embed, segmentMerge } from "./models";

export interface AppOptions {
  /** Longest accepted text, in characters (413 beyond it). */
  maxTextLength?: number;
  /** Set false to simulate a service whose model failed to load (503s). */
  modelReady?: boolean;
}

const TextBody = z.object({ text: z.string() });
const BlocksBody = z.object({ blocks: z.array(z.string()) });

export function createApp(options: AppOptions = {}): Express {
  const maxLength = options.maxTextLength ?? 8000;
  const ready = options.modelReady ?? true;

  const app = express();
  app.use(express.json({ limit: "2mb" }));

  function guardReady(res: Response): boolean {
    if (!ready) {
      res.status(503).json({ error: "model not loaded" });
      return false;
    }
    return true;
  }

  function readText(req: Request, res: Response): string | undefined {
    const parsed = TextBody.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "body must be {text: string}" });
      return undefined;
    }
    const text = parsed.data.text;
    if (text.length === 0) {
      res.status(400).json({ error: "text must be non-empty" });
      return undefined;
    }
    if (text.length > maxLength) {
      res.status(413).json({ error: `text exceeds ${maxLength} characters` });
      return undefined;
    }
    return text;
  }

  app.post("/classify-sentiment", (req, res) => {
    if (!guardReady(res)) return;
    const text = readText(req, res);
    if (text === undefined) return;
    res.json(classifySentiment(text));
  });

  app.post("/embed", (req, res) => {
    if (!guardReady(res)) return;
    const text = readText(req, res);
    if (text === undefined) return;
    res.json({ vector: embed(text) });
  });

  app.post("/segment", (req, res) => {
    if (!guardReady(res)) return;
    const parsed = BlocksBody.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "body must be {blocks: string[]}" });
      return;
    }
    for (const block of parsed.data.blocks) {
      if (block.length > maxLength) {
        res.status(413).json({ error: `block exceeds ${maxLength} characters` });
        return;
      }
    }
    res.json({ merge: segmentMerge(parsed.data.blocks) });
  });

  app.get("/info", (_req, res) => {
    res.json(MODEL_INFO);
  });

  app.get("/healthz", (_req, res) => {
    res.json({ ok: ready });
  });

  return app;
}
