use crate::error::{Error, Result};

/// Four-class order used when relabeling IEMOCAP annotations.
pub const IEMOCAP_CLASSES: [&str; 4] = ["anger", "happiness", "sadness", "neutral"];

/// Outcome of mapping a raw emotion annotation onto the four-class set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappedLabel {
    Class(&'static str),
    /// Known annotation that is not part of the four-class task.
    Discard,
}

/// Maps a raw IEMOCAP annotation (full name or the corpus' three-letter code)
/// to the four-class task: excitement merges into happiness, anger, happiness,
/// sadness and neutral pass through, every other known emotion is discarded.
pub fn map_label(raw: &str) -> Result<MappedLabel> {
    let key = raw.trim().to_ascii_lowercase();
    let mapped = match key.as_str() {
        "anger" | "angry" | "ang" => MappedLabel::Class("anger"),
        "happiness" | "happy" | "hap" => MappedLabel::Class("happiness"),
        "excitement" | "excited" | "exc" => MappedLabel::Class("happiness"),
        "sadness" | "sad" => MappedLabel::Class("sadness"),
        "neutral" | "neu" => MappedLabel::Class("neutral"),
        "frustration" | "frustrated" | "fru" | "surprise" | "surprised" | "sur" | "fear"
        | "fearful" | "fea" | "disgust" | "dis" | "other" | "oth" | "xxx" => MappedLabel::Discard,
        _ => return Err(Error::input(format!("unknown emotion label '{raw}'"))),
    };
    Ok(mapped)
}
