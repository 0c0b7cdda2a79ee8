/** Keyboard-first review: j/k walk the queue, a approves, x rejects.
 * Keys are ignored while the focus sits in a text field. */

export interface HotkeyActions {
  next(): void;
  previous(): void;
  approve(): void;
  reject(): void;
}

function isTyping(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) return false;
  const tag = target.tagName;
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT" || target.isContentEditable;
}

export function installHotkeys(doc: Document, actions: HotkeyActions): () => void {
  const handler = (event: KeyboardEvent): void => {
    if (event.ctrlKey || event.metaKey || event.altKey || isTyping(event.target)) return;
    switch (event.key) {
      case "j":
        actions.next();
        break;
      case "k":
        actions.previous();
        break;
      case "a":
        actions.approve();
        break;
      case "x":
        actions.reject();
        break;
      default:
        return;
    }
    event.preventDefault();
  };
  doc.addEventListener("keydown", handler);
  return () => doc.removeEventListener("keydown", handler);
}
