/**
 * HUD derivation: labels and values come straight from the latest frame's
 * hud/flags fields — nothing is recomputed client-side. Missing fields show
 * a dash placeholder.
 */
import { FlagsSchema, HudFields } from "./protocol.js";
import { z } from "zod";

export type Flags = z.infer<typeof FlagsSchema>;

export interface HudLine {
  label: string;
  value: string;
  highlight: boolean;
}

const DASH = "—";

function fmt(value: number | undefined, digits: number): string {
  return value === undefined ? DASH : value.toFixed(digits);
}

export function hudLines(hud: HudFields, flags: Flags): HudLine[] {
  return [
    { label: "Velocity", value: fmt(hud.velocity, 2), highlight: false },
    { label: "Takeover", value: flags.takeover ? "ON" : "off", highlight: flags.takeover },
    { label: "Disturbance", value: flags.disturbance ? "ON" : "off", highlight: flags.disturbance },
    {
      label: "Takeover Cost",
      value: fmt(hud.total_takeover_cost, 3),
      highlight: flags.takeover,
    },
    { label: "D Cost", value: fmt(hud.total_d_cost, 3), highlight: flags.disturbance },
    {
      label: "Episode",
      value: hud.episode === undefined ? DASH : String(hud.episode),
      highlight: false,
    },
    { label: "Success Rate", value: fmt(hud.success_rate, 2), highlight: false },
  ];
}
