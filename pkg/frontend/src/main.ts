import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Same-origin deployment: the console is served next to the API behind
// one TLS terminator, so relative paths are all the client needs.
new App(root, new ApiClient("")).start();
