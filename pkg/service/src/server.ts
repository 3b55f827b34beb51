import { createApp } from "./app";

const port = Number(process.env.PORT ?? 8787);
const maxTextLength = Number(process.env.MAX_TEXT_LENGTH ?? 8000);

const app = createApp({ maxTextLength });
const server = app.listen(port, () => {
  const address = server.address();
  const actual = typeof address === "object" && address ? address.port : port;
  // machine-readable so callers spawning the service can discover the port
  console.log(JSON.stringify({ event: "listening", port: actual }));
});

for (const signal of ["SIGINT", "SIGTERM"] as const) {
  process.on(signal, () => {
    server.close(() => process.exit(0));
  });
}
