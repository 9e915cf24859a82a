//! Time tags and ordered tag streams.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// Current version of the tag stream header.
pub const FORMAT_VERSION: u16 = 1;

/// A single detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeTag {
    /// Picoseconds since the stream epoch.
    pub time_ps: i64,
    pub channel: u16,
    pub flags: u16,
}

impl TimeTag {
    /// Set once a walk correction has been subtracted from `time_ps`.
    pub const CORRECTED: u16 = 1 << 0;
    /// Produced by the simulator rather than hardware.
    pub const SYNTHETIC: u16 = 1 << 1;
    /// Bits that may be set; the rest are reserved and must be zero.
    pub const KNOWN_FLAGS: u16 = Self::CORRECTED | Self::SYNTHETIC;

    pub const fn new(time_ps: i64, channel: u16) -> Self {
        TimeTag { time_ps, channel, flags: 0 }
    }

    pub const fn with_flags(mut self, flags: u16) -> Self {
        self.flags = flags;
        self
    }

    pub const fn is_corrected(&self) -> bool {
        self.flags & Self::CORRECTED != 0
    }

    /// Stream order: time, then channel.
    pub fn stream_cmp(&self, other: &Self) -> Ordering {
        self.time_ps.cmp(&other.time_ps).then(self.channel.cmp(&other.channel))
    }
}

/// An ordered sequence of time tags with its header.
///
/// Construction validates the ordering and channel invariants, so every
/// `TagStream` in circulation satisfies them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagStream {
    channel_count: u16,
    tags: Vec<TimeTag>,
}

impl TagStream {
    pub fn new(channel_count: u16, tags: Vec<TimeTag>) -> Result<Self> {
        check_tags(channel_count, &tags)?;
        Ok(TagStream { channel_count, tags })
    }

    /// Sorts `tags` into stream order first.
    pub fn from_unsorted(channel_count: u16, mut tags: Vec<TimeTag>) -> Result<Self> {
        tags.sort_by(TimeTag::stream_cmp);
        Self::new(channel_count, tags)
    }

    /// Single-channel stream from raw times.
    pub fn from_times(times: &[i64]) -> Result<Self> {
        Self::new(1, times.iter().map(|&t| TimeTag::new(t, 0)).collect())
    }

    pub(crate) fn from_parts_unchecked(channel_count: u16, tags: Vec<TimeTag>) -> Self {
        debug_assert!(check_tags(channel_count, &tags).is_ok());
        TagStream { channel_count, tags }
    }

    pub fn empty(channel_count: u16) -> Self {
        TagStream { channel_count, tags: Vec::new() }
    }

    pub fn version(&self) -> u16 {
        FORMAT_VERSION
    }

    pub fn channel_count(&self) -> u16 {
        self.channel_count
    }

    pub fn tags(&self) -> &[TimeTag] {
        &self.tags
    }

    pub fn into_tags(self) -> Vec<TimeTag> {
        self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TimeTag> {
        self.tags.iter()
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        self.tags.iter().map(|t| t.time_ps)
    }
}

impl<'a> IntoIterator for &'a TagStream {
    type Item = &'a TimeTag;
    type IntoIter = core::slice::Iter<'a, TimeTag>;

    fn into_iter(self) -> Self::IntoIter {
        self.tags.iter()
    }
}

/// Checks a single tag against its predecessor. Used by both the in-memory
/// constructor and the streaming file reader.
pub fn check_next(channel_count: u16, prev: Option<&TimeTag>, tag: &TimeTag, index: usize) -> Result<()> {
    if tag.channel >= channel_count {
        return Err(Error::integrity(
            index,
            alloc::format!("channel {} outside header channel count {}", tag.channel, channel_count),
        ));
    }
    if tag.flags & !TimeTag::KNOWN_FLAGS != 0 {
        return Err(Error::integrity(index, alloc::format!("reserved flag bits set: {:#06x}", tag.flags)));
    }
    if let Some(prev) = prev {
        if prev.stream_cmp(tag) == Ordering::Greater {
            return Err(Error::integrity(
                index,
                alloc::format!(
                    "ordering violation: ({}, ch{}) follows ({}, ch{})",
                    tag.time_ps,
                    tag.channel,
                    prev.time_ps,
                    prev.channel
                ),
            ));
        }
    }
    Ok(())
}

fn check_tags(channel_count: u16, tags: &[TimeTag]) -> Result<()> {
    let mut prev = None;
    for (i, tag) in tags.iter().enumerate() {
        check_next(channel_count, prev, tag, i)?;
        prev = Some(tag);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_first_out_of_order_record() {
        let err = TagStream::from_times(&[0, 100, 50, 10]).unwrap_err();
        assert!(matches!(err, Error::Integrity { index: 2, .. }), "{err:?}");
    }

    #[test]
    fn ties_ordered_by_channel() {
        let ok = TagStream::new(2, vec![TimeTag::new(5, 0), TimeTag::new(5, 1)]);
        assert!(ok.is_ok());
        let bad = TagStream::new(2, vec![TimeTag::new(5, 1), TimeTag::new(5, 0)]);
        assert!(matches!(bad, Err(Error::Integrity { index: 1, .. })));
    }

    #[test]
    fn channel_must_fit_header() {
        let err = TagStream::new(1, vec![TimeTag::new(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::Integrity { index: 0, .. }));
    }

    #[test]
    fn reserved_flags_rejected() {
        let err = TagStream::new(1, vec![TimeTag::new(0, 0).with_flags(0x8000)]).unwrap_err();
        assert!(matches!(err, Error::Integrity { index: 0, .. }));
    }

    #[test]
    fn from_unsorted_sorts() {
        let s = TagStream::from_unsorted(2, vec![TimeTag::new(9, 0), TimeTag::new(3, 1), TimeTag::new(3, 0)]).unwrap();
        let order: Vec<_> = s.iter().map(|t| (t.time_ps, t.channel)).collect();
        assert_eq!(order, vec![(3, 0), (3, 1), (9, 0)]);
    }
}
