use super::FontError;

/// Bounds-checked big-endian reads over one table's bytes.
#[derive(Clone, Copy)]
pub(crate) struct Reader<'a> {
    data: &'a [u8],
    table: &'static str,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], table: &'static str) -> Self {
        Reader { data, table }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    fn truncated(&self, offset: usize) -> FontError {
        FontError::malformed(self.table, format!("read past end at offset {offset} (length {})", self.data.len()))
    }

    pub fn slice(&self, offset: usize, len: usize) -> Result<&'a [u8], FontError> {
        let end = offset.checked_add(len).ok_or_else(|| self.truncated(offset))?;
        self.data.get(offset..end).ok_or_else(|| self.truncated(offset))
    }

    pub fn sub(&self, offset: usize) -> Result<Reader<'a>, FontError> {
        let data = self.data.get(offset..).ok_or_else(|| self.truncated(offset))?;
        Ok(Reader { data, table: self.table })
    }

    pub fn u8(&self, offset: usize) -> Result<u8, FontError> {
        self.data.get(offset).copied().ok_or_else(|| self.truncated(offset))
    }

    pub fn u16(&self, offset: usize) -> Result<u16, FontError> {
        let b = self.slice(offset, 2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn i16(&self, offset: usize) -> Result<i16, FontError> {
        Ok(self.u16(offset)? as i16)
    }

    pub fn u32(&self, offset: usize) -> Result<u32, FontError> {
        let b = self.slice(offset, 4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Sequential cursor used for the variable-length glyf encoding.
pub(crate) struct Cursor<'a> {
    reader: Reader<'a>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(reader: Reader<'a>, pos: usize) -> Self {
        Cursor { reader, pos }
    }

    pub fn skip(&mut self, n: usize) -> Result<(), FontError> {
        self.reader.slice(self.pos, n)?;
        self.pos += n;
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, FontError> {
        let v = self.reader.u8(self.pos)?;
        self.pos += 1;
        Ok(v)
    }

    pub fn u16(&mut self) -> Result<u16, FontError> {
        let v = self.reader.u16(self.pos)?;
        self.pos += 2;
        Ok(v)
    }

    pub fn i16(&mut self) -> Result<i16, FontError> {
        Ok(self.u16()? as i16)
    }
}
