//! HTTP implementations of the provider traits in `kea-core`.

mod embeddings;
mod http;
mod llm;
mod wikidata;

pub use embeddings::{
    parse_embeddings, EmbeddingsClient, EmbeddingsConfig, DEFAULT_EMBEDDINGS_MODEL, DEFAULT_EMBEDDINGS_URL,
};
pub use http::USER_AGENT;
pub use llm::{chat_body, chat_content, ChatClient, ChatConfig, DEFAULT_CHAT_MODEL, DEFAULT_CHAT_URL};
pub use wikidata::{
    parse_search, HttpSparqlEndpoint, WikidataSearchLinker, WikipediaRestClient, WIKIDATA_API_URL,
    WIKIPEDIA_SUMMARY_URL,
};
