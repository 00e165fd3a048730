/** One-keystroke judging: s = spam, n = nonspam, u = unknown. */

import { Label } from "./api.js";

export const KEY_BINDINGS: Record<string, Label> = {
  s: "spam",
  n: "nonspam",
  u: "unknown",
};

export function labelForKey(key: string): Label | null {
  return KEY_BINDINGS[key.toLowerCase()] ?? null;
}

interface KeyEventLike {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
}

interface KeyTarget {
  addEventListener(type: string, listener: (event: KeyEventLike) => void): void;
  removeEventListener(
    type: string,
    listener: (event: KeyEventLike) => void,
  ): void;
}

/** Attach the bindings to a key-event source; returns the detach function. */
export function bindKeyboard(
  target: KeyTarget,
  onLabel: (label: Label) => void,
): () => void {
  const listener = (event: KeyEventLike) => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return;
    }
    const label = labelForKey(event.key);
    if (label !== null) {
      onLabel(label);
    }
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}
