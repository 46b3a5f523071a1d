//! File formats: MOTChallenge text, GEMB/GBNP binaries, seqinfo.ini and the tracker config.

mod binary;
mod mot;
mod text;

pub use binary::{
    decode_embeddings, decode_renorm_params, encode_embeddings, encode_renorm_params, read_embeddings,
    read_renorm_params, write_embeddings, write_renorm_params, EmbeddingFile, FORMAT_VERSION, GBNP_MAGIC,
    GEMB_MAGIC,
};
pub use mot::{
    format_mot_detections, format_mot_gt, format_mot_results, parse_mot, read_mot, read_mot_filtered,
    write_mot_results, GtFilter, MotKind,
};
pub use text::{
    format_seqinfo, parse_config, parse_seqinfo, read_config, read_seqinfo, write_seqinfo, SequenceMeta,
};
