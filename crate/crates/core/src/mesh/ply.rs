use super::{parse_f64, unit_or_up, wrap_uv, IndexedAttribute, Location, Material, Mesh, MeshError, MeshFormat};
use crate::math::Vec3;

const FMT: MeshFormat = MeshFormat::Ply;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, MeshError> {
    let mut pos = 0;
    let mut lineno = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| MeshError::malformed(FMT, Location::Offset(pos), "header not terminated by end_header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| MeshError::malformed(FMT, Location::Line(lineno + 1), "non-UTF-8 header"))?
            .trim_end_matches('\r')
            .trim();
        pos += end + 1;
        lineno += 1;
        let loc = Location::Line(lineno);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if lineno == 1 {
            if line != "ply" {
                return Err(MeshError::malformed(FMT, loc, "missing `ply` magic"));
            }
            continue;
        }
        match toks.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                encoding = Some(match toks.get(1).copied() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some("binary_big_endian") => {
                        return Err(MeshError::UnsupportedFeature("big-endian binary PLY".into()))
                    }
                    other => {
                        return Err(MeshError::malformed(FMT, loc, format!("unknown PLY encoding {other:?}")))
                    }
                })
            }
            Some("element") => {
                let (Some(name), Some(count)) = (toks.get(1), toks.get(2)) else {
                    return Err(MeshError::malformed(FMT, loc, "element needs a name and a count"));
                };
                let count = count
                    .parse()
                    .map_err(|_| MeshError::malformed(FMT, loc, format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| MeshError::malformed(FMT, loc, "property before any element"))?;
                let bad = || MeshError::malformed(FMT, loc, format!("bad property declaration `{line}`"));
                let prop = if toks.get(1) == Some(&"list") {
                    let count = toks.get(2).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let item = toks.get(3).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let name = toks.get(4).ok_or_else(bad)?.to_string();
                    Property::List { name, count, item }
                } else {
                    let ty = toks.get(1).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let name = toks.get(2).ok_or_else(bad)?.to_string();
                    Property::Scalar { name, ty }
                };
                elem.props.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(MeshError::malformed(FMT, loc, format!("unknown header keyword `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| MeshError::malformed(FMT, Location::Line(2), "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: pos,
        body_line: lineno + 1,
    })
}

/// One element instance: scalar values in declaration order, lists separately.
#[derive(Default)]
struct Row {
    scalars: Vec<f64>,
    lists: Vec<Vec<f64>>,
}

trait RowSource {
    fn next_row(&mut self, elem: &Element) -> Result<Row, MeshError>;
    /// Location of the most recently read row.
    fn location(&self) -> Location;
}

struct AsciiRows<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    first_line: usize,
    last: usize,
}

impl RowSource for AsciiRows<'_> {
    fn location(&self) -> Location {
        Location::Line(self.last)
    }

    fn next_row(&mut self, elem: &Element) -> Result<Row, MeshError> {
        let (i, line) = loop {
            match self.lines.next() {
                Some((_, l)) if l.trim().is_empty() => {}
                Some(x) => break x,
                None => {
                    return Err(MeshError::malformed(
                        FMT,
                        Location::Line(self.first_line),
                        format!("unexpected end of data in element `{}`", elem.name),
                    ))
                }
            }
        };
        self.last = self.first_line + i;
        let loc = Location::Line(self.last);
        let mut toks = line.split_whitespace();
        let mut next = |what: &str| -> Result<f64, MeshError> {
            let t = toks
                .next()
                .ok_or_else(|| MeshError::malformed(FMT, loc, format!("missing value for `{what}`")))?;
            parse_f64(t, FMT, loc)
        };
        let mut row = Row::default();
        for p in &elem.props {
            match p {
                Property::Scalar { name, .. } => row.scalars.push(next(name)?),
                Property::List { name, .. } => {
                    let n = next(name)?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(MeshError::malformed(FMT, loc, format!("bad list length {n}")));
                    }
                    let items = (0..n as usize).map(|_| next(name)).collect::<Result<_, _>>()?;
                    row.lists.push(items);
                }
            }
        }
        Ok(row)
    }
}

struct BinaryRows<'a> {
    data: &'a [u8],
    pos: usize,
    base: usize,
}

impl BinaryRows<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        let n = ty.size();
        if self.pos + n > self.data.len() {
            return Err(MeshError::malformed(
                FMT,
                Location::Offset(self.base + self.pos),
                "unexpected end of binary data",
            ));
        }
        let v = ty.read_le(&self.data[self.pos..self.pos + n]);
        self.pos += n;
        if !v.is_finite() {
            return Err(MeshError::malformed(
                FMT,
                Location::Offset(self.base + self.pos - n),
                "non-finite value",
            ));
        }
        Ok(v)
    }
}

impl RowSource for BinaryRows<'_> {
    fn location(&self) -> Location {
        Location::Offset(self.base + self.pos)
    }

    fn next_row(&mut self, elem: &Element) -> Result<Row, MeshError> {
        let mut row = Row::default();
        for p in &elem.props {
            match p {
                Property::Scalar { ty, .. } => row.scalars.push(self.read(*ty)?),
                Property::List { count, item, .. } => {
                    let n = self.read(*count)?;
                    if n < 0.0 {
                        return Err(MeshError::malformed(
                            FMT,
                            Location::Offset(self.base + self.pos),
                            "negative list length",
                        ));
                    }
                    let items = (0..n as usize).map(|_| self.read(*item)).collect::<Result<_, _>>()?;
                    row.lists.push(items);
                }
            }
        }
        Ok(row)
    }
}

fn scalar_slot(elem: &Element, names: &[&str]) -> Option<usize> {
    elem.props
        .iter()
        .filter(|p| matches!(p, Property::Scalar { .. }))
        .position(|p| names.contains(&p.name()))
}

pub(super) fn parse(bytes: &[u8]) -> Result<Mesh, MeshError> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let mut source: Box<dyn RowSource> = match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|e| MeshError::malformed(FMT, Location::Offset(header.body_offset + e.valid_up_to()), "invalid UTF-8"))?;
            Box::new(AsciiRows {
                lines: text.lines().enumerate(),
                first_line: header.body_line,
                last: header.body_line,
            })
        }
        Encoding::BinaryLe => Box::new(BinaryRows {
            data: body,
            pos: 0,
            base: header.body_offset,
        }),
    };

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut has_normals = false;
    let mut has_uvs = false;
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for elem in &header.elements {
        match elem.name.as_str() {
            "vertex" => {
                let xyz = ["x", "y", "z"].map(|n| scalar_slot(elem, &[n]));
                let [Some(x), Some(y), Some(z)] = xyz else {
                    return Err(MeshError::malformed(FMT, Location::Line(1), "vertex element lacks x/y/z"));
                };
                let nrm = ["nx", "ny", "nz"].map(|n| scalar_slot(elem, &[n]));
                let uv = [
                    scalar_slot(elem, &["u", "s", "texture_u", "texture_s"]),
                    scalar_slot(elem, &["v", "t", "texture_v", "texture_t"]),
                ];
                has_normals = nrm.iter().all(Option::is_some);
                has_uvs = uv.iter().all(Option::is_some);
                for _ in 0..elem.count {
                    let row = source.next_row(elem)?;
                    vertices.push(Vec3::new(row.scalars[x], row.scalars[y], row.scalars[z]));
                    if let [Some(a), Some(b), Some(c)] = nrm {
                        normals.push(unit_or_up(Vec3::new(row.scalars[a], row.scalars[b], row.scalars[c])));
                    }
                    if let [Some(u), Some(v)] = uv {
                        uvs.push([wrap_uv(row.scalars[u]), wrap_uv(row.scalars[v])]);
                    }
                }
            }
            "face" => {
                let list = elem
                    .props
                    .iter()
                    .filter(|p| matches!(p, Property::List { .. }))
                    .position(|p| p.name() == "vertex_indices" || p.name() == "vertex_index")
                    .ok_or_else(|| MeshError::malformed(FMT, Location::Line(1), "face element lacks vertex_indices"))?;
                for f in 0..elem.count {
                    let row = source.next_row(elem)?;
                    let face_loc = source.location();
                    let idx = &row.lists[list];
                    if idx.len() < 3 {
                        return Err(MeshError::malformed(FMT, face_loc, format!("face {f} has fewer than 3 vertices")));
                    }
                    let mut as_u32 = Vec::with_capacity(idx.len());
                    for &i in idx {
                        if i < 0.0 || i as usize >= vertices.len() {
                            return Err(MeshError::malformed(
                                FMT,
                                face_loc,
                                format!("face {f} references vertex {i} of {}", vertices.len()),
                            ));
                        }
                        as_u32.push(i as u32);
                    }
                    for k in 1..as_u32.len() - 1 {
                        triangles.push([as_u32[0], as_u32[k], as_u32[k + 1]]);
                    }
                }
            }
            _ => {
                for _ in 0..elem.count {
                    source.next_row(elem)?;
                }
            }
        }
    }

    let n = triangles.len();
    Ok(Mesh {
        normals: has_normals.then(|| IndexedAttribute {
            values: normals,
            indices: triangles.clone(),
        }),
        uvs: has_uvs.then(|| IndexedAttribute {
            values: uvs,
            indices: triangles.clone(),
        }),
        vertices,
        triangles,
        materials: vec![Material::default()],
        triangle_material: vec![0; n],
    })
}
