//! Reading and writing TTG1 tag files.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tagwalk_core::format::{self, Header, HEADER_LEN, RECORD_LEN};
use tagwalk_core::tag::check_next;
use tagwalk_core::{TagStream, TimeTag};

use crate::error::{Error, Result};

/// Streaming record reader. Checks ordering as it goes, so a consumer can
/// process files larger than memory.
pub struct TagReader<R> {
    inner: R,
    header: Header,
    index: usize,
    prev: Option<TimeTag>,
    done: bool,
}

impl<R: Read> TagReader<R> {
    pub fn new(mut inner: R) -> std::result::Result<Self, ReadError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_full(&mut inner, &mut header)?;
        let header = format::decode_header(&header[..got])?;
        Ok(TagReader { inner, header, index: 0, prev: None, done: false })
    }

    pub fn header(&self) -> Header {
        self.header
    }
}

/// Error from [`TagReader`], before a path is attached.
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] tagwalk_core::Error),
}

impl ReadError {
    fn at(self, path: &Path) -> Error {
        match self {
            ReadError::Io(e) => Error::io(path, e),
            ReadError::Core(e) => Error::File { path: path.into(), source: e },
        }
    }
}

impl<R: Read> Iterator for TagReader<R> {
    type Item = std::result::Result<TimeTag, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut buf = [0u8; RECORD_LEN];
        let got = match read_full(&mut self.inner, &mut buf) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        if got == 0 {
            self.done = true;
            return None;
        }
        let result = (|| {
            if got < RECORD_LEN {
                return Err(tagwalk_core::Error::Format(format!(
                    "truncated record {} ({got} of {RECORD_LEN} bytes)",
                    self.index
                )));
            }
            let tag = format::decode_record(&buf, self.index)?;
            check_next(self.header.channel_count, self.prev.as_ref(), &tag, self.index)?;
            Ok(tag)
        })();
        match result {
            Ok(tag) => {
                self.prev = Some(tag);
                self.index += 1;
                Some(Ok(tag))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e.into()))
            }
        }
    }
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Streaming writer; refuses a tag that would break stream order.
pub struct TagWriter<W: Write> {
    inner: W,
    channel_count: u16,
    index: usize,
    prev: Option<TimeTag>,
}

impl<W: Write> TagWriter<W> {
    pub fn new(mut inner: W, channel_count: u16) -> io::Result<Self> {
        inner.write_all(&format::encode_header(channel_count))?;
        Ok(TagWriter { inner, channel_count, index: 0, prev: None })
    }

    pub fn push(&mut self, tag: &TimeTag) -> std::result::Result<(), ReadError> {
        check_next(self.channel_count, self.prev.as_ref(), tag, self.index)?;
        self.inner.write_all(&format::encode_record(tag))?;
        self.prev = Some(*tag);
        self.index += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn read_tags(path: impl AsRef<Path>) -> Result<TagStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = TagReader::new(BufReader::new(file)).map_err(|e| e.at(path))?;
    let channels = reader.header().channel_count;
    let tags = reader.collect::<std::result::Result<Vec<_>, _>>().map_err(|e| e.at(path))?;
    TagStream::new(channels, tags).map_err(|e| Error::File { path: path.into(), source: e })
}

pub fn write_tags(stream: &TagStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = TagWriter::new(BufWriter::new(file), stream.channel_count()).map_err(|e| Error::io(path, e))?;
    for tag in stream {
        writer.push(tag).map_err(|e| e.at(path))?;
    }
    writer.finish().map_err(|e| Error::io(path, e))?;
    Ok(())
}
