import { ApiClient } from "./api.js";
import { ConsoleApp } from "./app.js";

// service base URL via ?service=http://host:port, default same origin
const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

new ConsoleApp(root, new ApiClient(base));
