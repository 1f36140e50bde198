//! Core domain types: skill classes, per-frame label sequences, segments and
//! contiguous timelines, plus the conversions between them.
//!
//! A [`Timeline`] is the canonical artifact exchanged between every stage of
//! the pipeline: an ordered list of maximal, contiguous, non-overlapping
//! labeled segments covering frames `0..n_frames`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default video frame rate for the corpus.
pub const DEFAULT_FPS: f64 = 24.0;

/// Number of classes: nine skills plus the `NONE` background class.
pub const NUM_CLASSES: usize = 10;

/// One of the nine isometric skills, or the `NONE` background class.
///
/// `NONE` is a first-class label (frames between holds), not an absence
/// marker. The id order is fixed (skills alphabetically by short code,
/// `NONE` last with id 9) so serialized artifacts are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkillClass {
    BackLever,
    FrontLever,
    HumanFlag,
    IronCross,
    Maltese,
    OneArmFrontLever,
    OneArmHandstand,
    Planche,
    VSit,
    None,
}

impl SkillClass {
    pub const ALL: [SkillClass; NUM_CLASSES] = [
        SkillClass::BackLever,
        SkillClass::FrontLever,
        SkillClass::HumanFlag,
        SkillClass::IronCross,
        SkillClass::Maltese,
        SkillClass::OneArmFrontLever,
        SkillClass::OneArmHandstand,
        SkillClass::Planche,
        SkillClass::VSit,
        SkillClass::None,
    ];

    /// Numeric id in `[0, 9]`.
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or(Error::InvalidClassId(id))
    }

    /// Short code used in annotations and reports.
    pub fn name(self) -> &'static str {
        match self {
            SkillClass::BackLever => "BL",
            SkillClass::FrontLever => "FL",
            SkillClass::HumanFlag => "FLAG",
            SkillClass::IronCross => "IC",
            SkillClass::Maltese => "MAL",
            SkillClass::OneArmFrontLever => "OAFL",
            SkillClass::OneArmHandstand => "OAHS",
            SkillClass::Planche => "PL",
            SkillClass::VSit => "VSIT",
            SkillClass::None => "NONE",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    /// True for the `NONE` background class.
    pub fn is_background(self) -> bool {
        self == SkillClass::None
    }
}

impl std::fmt::Display for SkillClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for SkillClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SkillClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        SkillClass::from_name(&name).map_err(|_| D::Error::custom(format!("unknown class `{name}`")))
    }
}

/// Per-frame class labels for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    pub labels: Vec<SkillClass>,
    pub fps: f64,
}

impl LabelSequence {
    pub fn new(labels: Vec<SkillClass>, fps: f64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(LabelSequence { labels, fps })
    }

    pub fn with_default_fps(labels: Vec<SkillClass>) -> Result<Self> {
        Self::new(labels, DEFAULT_FPS)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A labeled frame interval, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub class: SkillClass,
    #[serde(rename = "start_frame")]
    pub start: usize,
    #[serde(rename = "end_frame")]
    pub end: usize,
}

impl Segment {
    pub fn new(class: SkillClass, start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidSegment { start, end });
        }
        Ok(Segment { class, start, end })
    }

    pub fn duration_frames(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn duration_secs(&self, fps: f64) -> f64 {
        self.duration_frames() as f64 / fps
    }

    /// Intersection-over-union of the two frame spans; 0 when disjoint.
    pub fn iou(&self, other: &Segment) -> f64 {
        let inter_start = self.start.max(other.start);
        let inter_end = self.end.min(other.end);
        if inter_start > inter_end {
            return 0.0;
        }
        let inter = (inter_end - inter_start + 1) as f64;
        let union = (self.duration_frames() + other.duration_frames()) as f64 - inter;
        inter / union
    }
}

/// Intersection-over-union of two segments' frame spans.
pub fn segment_iou(a: &Segment, b: &Segment) -> f64 {
    a.iou(b)
}

/// An ordered, contiguous, non-overlapping segmentation of a whole video.
///
/// Invariants (checked by [`Timeline::validate`]): segments are sorted and
/// contiguous (`next.start == prev.end + 1`), the first starts at frame 0,
/// the last ends at `n_frames - 1`, and no two adjacent segments share a
/// class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    #[serde(default)]
    pub video_id: String,
    pub fps: f64,
    pub n_frames: usize,
    pub segments: Vec<Segment>,
}

impl Timeline {
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        n_frames: usize,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        let tl = Timeline {
            video_id: video_id.into(),
            fps,
            n_frames,
            segments,
        };
        tl.validate()?;
        Ok(tl)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() || self.n_frames == 0 {
            return Err(Error::EmptySequence);
        }
        let first = &self.segments[0];
        if first.start != 0 {
            return Err(Error::Discontiguous(0));
        }
        for seg in &self.segments {
            if seg.start > seg.end {
                return Err(Error::InvalidSegment {
                    start: seg.start,
                    end: seg.end,
                });
            }
            if seg.end >= self.n_frames {
                return Err(Error::SegmentOutOfBounds {
                    start: seg.start,
                    end: seg.end,
                    max: self.n_frames - 1,
                });
            }
        }
        for pair in self.segments.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.start != prev.end + 1 {
                return Err(Error::Discontiguous(prev.end + 1));
            }
            if next.class == prev.class {
                return Err(Error::NotMaximal(next.class.name().to_string(), next.start));
            }
        }
        let last = self.segments.last().expect("non-empty");
        if last.end != self.n_frames - 1 {
            return Err(Error::Discontiguous(last.end + 1));
        }
        Ok(())
    }

    /// Total seconds spent holding skills (`NONE` segments excluded).
    pub fn total_hold_secs(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| !s.class.is_background())
            .map(|s| s.duration_secs(self.fps))
            .sum()
    }
}

/// Run-length encodes a label sequence into a maximal-segment timeline.
pub fn labels_to_segments(labels: &LabelSequence) -> Result<Timeline> {
    if labels.labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut segments: Vec<Segment> = Vec::new();
    for (i, &class) in labels.labels.iter().enumerate() {
        match segments.last_mut() {
            Some(last) if last.class == class => last.end = i,
            _ => segments.push(Segment { class, start: i, end: i }),
        }
    }
    Ok(Timeline {
        video_id: String::new(),
        fps: labels.fps,
        n_frames: labels.labels.len(),
        segments,
    })
}

/// Expands a timeline back into one label per frame.
pub fn segments_to_labels(timeline: &Timeline) -> Result<LabelSequence> {
    timeline.validate()?;
    let mut labels = Vec::with_capacity(timeline.n_frames);
    for seg in &timeline.segments {
        labels.extend(std::iter::repeat(seg.class).take(seg.duration_frames()));
    }
    LabelSequence::new(labels, timeline.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(ids: &[u8]) -> LabelSequence {
        let labels = ids.iter().map(|&i| SkillClass::from_id(i).unwrap()).collect();
        LabelSequence::with_default_fps(labels).unwrap()
    }

    #[test]
    fn class_ids_are_a_fixed_bijection() {
        let names = ["BL", "FL", "FLAG", "IC", "MAL", "OAFL", "OAHS", "PL", "VSIT", "NONE"];
        for (id, name) in names.iter().enumerate() {
            let c = SkillClass::from_id(id as u8).unwrap();
            assert_eq!(c.name(), *name);
            assert_eq!(c.id() as usize, id);
            assert_eq!(SkillClass::from_name(name).unwrap(), c);
        }
        assert!(SkillClass::from_id(10).is_err());
        assert!(matches!(
            SkillClass::from_name("XYZ"),
            Err(Error::UnknownClass(s)) if s == "XYZ"
        ));
    }

    #[test]
    fn single_run_collapses_to_one_segment() {
        let tl = labels_to_segments(&seq(&[0, 0, 0])).unwrap();
        assert_eq!(tl.segments, vec![Segment::new(SkillClass::BackLever, 0, 2).unwrap()]);
        assert_eq!(tl.n_frames, 3);
    }

    #[test]
    fn run_length_encoding_by_inspection() {
        let tl = labels_to_segments(&seq(&[1, 1, 9, 9, 1])).unwrap();
        let expect = vec![
            Segment::new(SkillClass::FrontLever, 0, 1).unwrap(),
            Segment::new(SkillClass::None, 2, 3).unwrap(),
            Segment::new(SkillClass::FrontLever, 4, 4).unwrap(),
        ];
        assert_eq!(tl.segments, expect);
    }

    #[test]
    fn empty_labels_rejected() {
        let empty = LabelSequence { labels: vec![], fps: DEFAULT_FPS };
        assert!(matches!(labels_to_segments(&empty), Err(Error::EmptySequence)));
    }

    #[test]
    fn segments_expand_to_labels() {
        let tl = Timeline::new("v", 24.0, 5, vec![Segment::new(SkillClass::IronCross, 0, 4).unwrap()]).unwrap();
        assert_eq!(segments_to_labels(&tl).unwrap(), seq(&[3, 3, 3, 3, 3]));

        let tl = Timeline::new(
            "v",
            24.0,
            3,
            vec![
                Segment::new(SkillClass::BackLever, 0, 1).unwrap(),
                Segment::new(SkillClass::None, 2, 2).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(segments_to_labels(&tl).unwrap(), seq(&[0, 0, 9]));
    }

    #[test]
    fn gap_is_reported_with_its_frame() {
        let tl = Timeline {
            video_id: String::new(),
            fps: 24.0,
            n_frames: 5,
            segments: vec![
                Segment { class: SkillClass::BackLever, start: 0, end: 1 },
                Segment { class: SkillClass::None, start: 3, end: 4 },
            ],
        };
        assert!(matches!(segments_to_labels(&tl), Err(Error::Discontiguous(2))));
    }

    #[test]
    fn adjacent_equal_classes_rejected() {
        let tl = Timeline {
            video_id: String::new(),
            fps: 24.0,
            n_frames: 4,
            segments: vec![
                Segment { class: SkillClass::Planche, start: 0, end: 1 },
                Segment { class: SkillClass::Planche, start: 2, end: 3 },
            ],
        };
        assert!(matches!(tl.validate(), Err(Error::NotMaximal(_, 2))));
    }

    #[test]
    fn iou_examples() {
        let a = Segment::new(SkillClass::BackLever, 0, 9).unwrap();
        assert_eq!(a.iou(&a), 1.0);
        let b = Segment::new(SkillClass::BackLever, 10, 19).unwrap();
        assert_eq!(a.iou(&b), 0.0);
        // intersection 5..=9 (5 frames), union 0..=14 (15 frames)
        let c = Segment::new(SkillClass::BackLever, 5, 14).unwrap();
        assert!((a.iou(&c) - 5.0 / 15.0).abs() < 1e-15);
        assert_eq!(segment_iou(&a, &c), c.iou(&a));
    }

    #[test]
    fn timeline_json_round_trip_matches_schema() {
        let tl = Timeline::new(
            "PL_017",
            24.0,
            140,
            vec![
                Segment::new(SkillClass::None, 0, 23).unwrap(),
                Segment::new(SkillClass::Planche, 24, 119).unwrap(),
                Segment::new(SkillClass::None, 120, 139).unwrap(),
            ],
        )
        .unwrap();
        let json = serde_json::to_value(&tl).unwrap();
        assert_eq!(json["video_id"], "PL_017");
        assert_eq!(json["n_frames"], 140);
        assert_eq!(json["segments"][1]["class"], "PL");
        assert_eq!(json["segments"][1]["start_frame"], 24);
        assert_eq!(json["segments"][1]["end_frame"], 119);
        let back: Timeline = serde_json::from_value(json).unwrap();
        assert_eq!(back, tl);
    }

    #[test]
    fn unknown_class_in_json_is_rejected() {
        let err = serde_json::from_str::<Segment>(r#"{"class":"XYZ","start_frame":0,"end_frame":3}"#)
            .unwrap_err();
        assert!(err.to_string().contains("unknown class `XYZ`"));
    }

    proptest! {
        #[test]
        fn labels_segments_round_trip(ids in proptest::collection::vec(0u8..10, 1..200)) {
            let s = seq(&ids);
            let tl = labels_to_segments(&s).unwrap();
            tl.validate().unwrap();
            let back = segments_to_labels(&tl).unwrap();
            prop_assert_eq!(back.labels, s.labels);
        }

        #[test]
        fn iou_symmetric_and_one_iff_identical(
            s1 in 0usize..50, d1 in 0usize..30, s2 in 0usize..50, d2 in 0usize..30
        ) {
            let a = Segment::new(SkillClass::Maltese, s1, s1 + d1).unwrap();
            let b = Segment::new(SkillClass::Maltese, s2, s2 + d2).unwrap();
            prop_assert_eq!(a.iou(&b), b.iou(&a));
            let identical = a.start == b.start && a.end == b.end;
            prop_assert_eq!(a.iou(&b) == 1.0, identical);
        }
    }
}
