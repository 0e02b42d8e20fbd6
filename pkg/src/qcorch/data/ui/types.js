// Payload shapes of the session-service API (the UI's only data source).
export {};
