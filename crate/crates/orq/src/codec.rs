//! Little-endian binary encoding for every index structure.
//!
//! Values encode field by field; containers are length-prefixed. Decoding
//! takes the shared build context so rebuilt-on-load components (universal
//! tables, hash directories) come from the live configuration rather than
//! the file.

use crate::config::Ctx;
use crate::error::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Default)]
pub struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Writer {
        Writer { buf: Vec::new() }
    }

    pub fn put_bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("unexpected end of input".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub trait Codec: Sized {
    fn encode(&self, w: &mut Writer);
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self>;
}

macro_rules! impl_codec_prim {
    ($ty:ty, $n:expr) => {
        impl Codec for $ty {
            fn encode(&self, w: &mut Writer) {
                w.put_bytes(&self.to_le_bytes());
            }
            fn decode(r: &mut Reader<'_>, _ctx: &Arc<Ctx>) -> Result<Self> {
                let b = r.take($n)?;
                Ok(<$ty>::from_le_bytes(b.try_into().unwrap()))
            }
        }
    };
}

impl_codec_prim!(u8, 1);
impl_codec_prim!(u16, 2);
impl_codec_prim!(u32, 4);
impl_codec_prim!(u64, 8);
impl_codec_prim!(i64, 8);

impl Codec for usize {
    fn encode(&self, w: &mut Writer) {
        (*self as u64).encode(w);
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        Ok(u64::decode(r, ctx)? as usize)
    }
}

impl Codec for bool {
    fn encode(&self, w: &mut Writer) {
        (*self as u8).encode(w);
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        Ok(u8::decode(r, ctx)? != 0)
    }
}

impl<T: Codec> Codec for Vec<T> {
    fn encode(&self, w: &mut Writer) {
        (self.len() as u64).encode(w);
        for item in self {
            item.encode(w);
        }
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        let n = u64::decode(r, ctx)? as usize;
        if n > r.remaining() + 1 && n > 1 << 40 {
            return Err(Error::Format(format!("implausible container length {n}")));
        }
        let mut out = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            out.push(T::decode(r, ctx)?);
        }
        Ok(out)
    }
}

impl<T: Codec> Codec for Option<T> {
    fn encode(&self, w: &mut Writer) {
        match self {
            None => 0u8.encode(w),
            Some(v) => {
                1u8.encode(w);
                v.encode(w);
            }
        }
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        match u8::decode(r, ctx)? {
            0 => Ok(None),
            1 => Ok(Some(T::decode(r, ctx)?)),
            t => Err(Error::Format(format!("bad option tag {t}"))),
        }
    }
}

impl<T: Codec> Codec for Box<T> {
    fn encode(&self, w: &mut Writer) {
        (**self).encode(w);
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        Ok(Box::new(T::decode(r, ctx)?))
    }
}

impl Codec for Arc<Ctx> {
    fn encode(&self, _w: &mut Writer) {}
    fn decode(_r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        Ok(ctx.clone())
    }
}

impl Codec for crate::Point {
    fn encode(&self, w: &mut Writer) {
        self.x.encode(w);
        self.y.encode(w);
    }
    fn decode(r: &mut Reader<'_>, ctx: &Arc<Ctx>) -> Result<Self> {
        Ok(crate::Point { x: u64::decode(r, ctx)?, y: u64::decode(r, ctx)? })
    }
}

/// Field-by-field Codec for a struct with named fields.
macro_rules! impl_codec {
    ($ty:ident { $($field:ident),+ $(,)? }) => {
        impl $crate::codec::Codec for $ty {
            fn encode(&self, w: &mut $crate::codec::Writer) {
                $($crate::codec::Codec::encode(&self.$field, w);)+
            }
            fn decode(
                r: &mut $crate::codec::Reader<'_>,
                ctx: &std::sync::Arc<$crate::config::Ctx>,
            ) -> $crate::error::Result<Self> {
                Ok($ty { $($field: $crate::codec::Codec::decode(r, ctx)?),+ })
            }
        }
    };
}

pub(crate) use impl_codec;
