import { startApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Same-origin by default; override with ?api=http://host:port for dev setups.
const override = new URLSearchParams(window.location.search).get("api");
startApp(root, override ?? "");
