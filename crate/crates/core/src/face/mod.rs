//! Face authentication: 64x64 crops, 128-d embeddings, the enrollment
//! database and nearest-neighbour recognition behind a grant/deny gate.

pub mod db;
pub mod embed;
pub mod image;
pub mod recognize;

pub use db::{enroll, import_embeddings, EnrollmentDb, StoredEmbedding};
pub use embed::{embed_image, FaceEmbedder, FaceEmbedding, ProjectionEmbedder, EMBEDDING_DIM};
pub use image::{random_image, synthetic_face, FaceImage, FACE_SIDE};
pub use recognize::{
    gate_decision, recognize, AuthEvent, MatchResult, NoMatchCause, DEFAULT_MATCH_THRESHOLD,
};
