/**
 * Keyboard-first labeling: digits pick taxonomy options, j/k walk the
 * queue, Enter submits, Escape backs out of the picker.
 */

export type KeyAction =
  | { kind: "pick"; key: string }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "submit" }
  | { kind: "cancel" }
  | { kind: "reveal" }
  | { kind: "skip-tertiary" }
  | { kind: "none" };

export function actionForKey(key: string, inTextInput: boolean): KeyAction {
  if (inTextInput) {
    if (key === "Escape") return { kind: "cancel" };
    return { kind: "none" };
  }
  if (key >= "1" && key <= "9") return { kind: "pick", key };
  switch (key) {
    case "j":
    case "ArrowDown":
      return { kind: "next" };
    case "k":
    case "ArrowUp":
      return { kind: "prev" };
    case "Enter":
      return { kind: "submit" };
    case "Escape":
      return { kind: "cancel" };
    case "r":
      return { kind: "reveal" };
    case "0":
      return { kind: "skip-tertiary" };
    default:
      return { kind: "none" };
  }
}
