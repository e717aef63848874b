import { ReviewApp } from "./app.js";

const params = new URLSearchParams(window.location.search);

const app = new ReviewApp({
    baseUrl: "",
    annotatorId: params.get("annotator") ?? "",
});

window.addEventListener("DOMContentLoaded", () => {
    app.mount(document.getElementById("app")!);
    if (params.get("expert") === "1") {
        const box = document.getElementById("expert-mode") as HTMLInputElement;
        box.checked = true;
        box.dispatchEvent(new Event("change"));
    }
});
