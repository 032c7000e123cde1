//! PLY reader (ascii, binary little endian) and writer.

use std::fmt::Write as _;

use super::{LoadedCloud, Point3, PointCloud};

type ParseResult<T> = Result<T, (u64, String)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Self> {
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
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> ParseResult<Header> {
    let mut pos = 0usize;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    loop {
        let line_start = pos;
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err((line_start as u64, "unterminated PLY header".into()));
        };
        pos += nl + 1;
        let line = std::str::from_utf8(&bytes[line_start..line_start + nl])
            .map_err(|_| (line_start as u64, "header is not valid UTF-8".to_string()))?
            .trim_end_matches('\r')
            .trim();
        let off = line_start as u64;
        if first {
            if line != "ply" {
                return Err((0, "missing 'ply' magic".into()));
            }
            first = false;
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some(other) => return Err((off, format!("unsupported PLY format '{other}'"))),
                    None => return Err((off, "format line without encoding".into())),
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok.next().ok_or((off, "element without name".to_string()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or((off, format!("element '{name}' has no valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or((off, "property before any element".to_string()))?;
                let ty = tok.next().ok_or((off, "property without type".to_string()))?;
                if ty == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => el.properties.push(Property::List { count, item }),
                        _ => return Err((off, "malformed list property".into())),
                    }
                } else {
                    let ty = Scalar::parse(ty).ok_or((off, format!("unknown property type '{ty}'")))?;
                    let name = tok.next().ok_or((off, "property without name".to_string()))?;
                    el.properties.push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => break,
            Some(other) => return Err((off, format!("unexpected header keyword '{other}'"))),
        }
    }
    let encoding = encoding.ok_or((0, "header has no format line".to_string()))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: pos,
    })
}

/// Column positions of the vertex fields we keep.
struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
}

fn vertex_layout(el: &Element) -> Result<VertexLayout, String> {
    let find = |want: &str| {
        el.properties.iter().position(|p| matches!(p, Property::Scalar { name, .. } if name == want))
    };
    let mut xyz = [0; 3];
    for (slot, name) in xyz.iter_mut().zip(["x", "y", "z"]) {
        *slot = find(name).ok_or_else(|| format!("vertex element lacks property '{name}'"))?;
    }
    let rgb = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };
    Ok(VertexLayout { xyz, rgb })
}

pub(super) fn parse(bytes: &[u8]) -> ParseResult<LoadedCloud> {
    let header = parse_header(bytes)?;
    let vertex = header.elements.iter().position(|e| e.name == "vertex");
    let layout = match vertex {
        Some(v) => Some(vertex_layout(&header.elements[v]).map_err(|m| (0, m))?),
        None => None,
    };
    let mut sink = Sink::new(layout.as_ref().is_some_and(|l| l.rgb.is_some()));
    match header.encoding {
        Encoding::Ascii => parse_ascii(bytes, &header, vertex, layout.as_ref(), &mut sink)?,
        Encoding::BinaryLe => parse_binary(bytes, &header, vertex, layout.as_ref(), &mut sink)?,
    }
    Ok(sink.finish())
}

struct Sink {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
    skipped: usize,
}

impl Sink {
    fn new(has_color: bool) -> Self {
        Sink {
            points: Vec::new(),
            colors: has_color.then(Vec::new),
            skipped: 0,
        }
    }

    fn push(&mut self, row: &[f64], layout: &VertexLayout) {
        let [x, y, z] = layout.xyz.map(|i| row[i]);
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            self.skipped += 1;
            return;
        }
        self.points.push(Point3::new(x, y, z));
        if let (Some(colors), Some(rgb)) = (self.colors.as_mut(), layout.rgb) {
            colors.push(rgb.map(|i| row[i].clamp(0.0, 255.0) as u8));
        }
    }

    fn finish(self) -> LoadedCloud {
        let cloud = match self.colors {
            Some(c) => PointCloud::with_colors(self.points, c).expect("one color per kept point"),
            None => PointCloud::new(self.points),
        };
        LoadedCloud {
            cloud,
            skipped_non_finite: self.skipped,
        }
    }
}

fn parse_ascii(
    bytes: &[u8],
    header: &Header,
    vertex: Option<usize>,
    layout: Option<&VertexLayout>,
    sink: &mut Sink,
) -> ParseResult<()> {
    let mut pos = header.body_offset;
    let mut row = Vec::new();
    for (ei, el) in header.elements.iter().enumerate() {
        for r in 0..el.count {
            // skip blank lines
            let (line_start, line) = loop {
                if pos >= bytes.len() {
                    return Err((
                        pos as u64,
                        format!("unexpected end of file: element '{}' declares {} rows, found {r}", el.name, el.count),
                    ));
                }
                let start = pos;
                let nl = bytes[pos..].iter().position(|&b| b == b'\n').unwrap_or(bytes.len() - pos);
                pos += nl + 1;
                let text = std::str::from_utf8(&bytes[start..start + nl])
                    .map_err(|_| (start as u64, "body is not valid UTF-8".to_string()))?
                    .trim();
                if !text.is_empty() {
                    break (start, text);
                }
            };
            let mut tokens = line.split_whitespace();
            let mut next = || -> ParseResult<f64> {
                let t = tokens
                    .next()
                    .ok_or((line_start as u64, "row has too few values".to_string()))?;
                parse_ascii_number(t).ok_or((line_start as u64, format!("invalid number '{t}'")))
            };
            row.clear();
            for p in &el.properties {
                match p {
                    Property::Scalar { .. } => row.push(next()?),
                    Property::List { .. } => {
                        let n = next()?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err((line_start as u64, "invalid list length".into()));
                        }
                        for _ in 0..n as usize {
                            next()?;
                        }
                        row.push(f64::NAN);
                    }
                }
            }
            if Some(ei) == vertex {
                sink.push(&row, layout.expect("vertex layout"));
            }
        }
    }
    Ok(())
}

fn parse_ascii_number(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().or_else(|| match t.to_ascii_lowercase().as_str() {
        "nan" | "-nan" => Some(f64::NAN),
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    })
}

fn parse_binary(
    bytes: &[u8],
    header: &Header,
    vertex: Option<usize>,
    layout: Option<&VertexLayout>,
    sink: &mut Sink,
) -> ParseResult<()> {
    let mut pos = header.body_offset;
    let mut row = Vec::new();
    let take = |pos: &mut usize, n: usize, what: &str| -> ParseResult<usize> {
        if *pos + n > bytes.len() {
            return Err((bytes.len() as u64, format!("truncated body while reading {what}")));
        }
        let at = *pos;
        *pos += n;
        Ok(at)
    };
    for (ei, el) in header.elements.iter().enumerate() {
        let all_scalar = el.properties.iter().all(|p| matches!(p, Property::Scalar { .. }));
        if all_scalar && Some(ei) != vertex {
            let stride: usize = el
                .properties
                .iter()
                .map(|p| match p {
                    Property::Scalar { ty, .. } => ty.size(),
                    Property::List { .. } => unreachable!(),
                })
                .sum();
            take(&mut pos, stride * el.count, &el.name)?;
            continue;
        }
        for r in 0..el.count {
            row.clear();
            for p in &el.properties {
                match *p {
                    Property::Scalar { ty, .. } => {
                        let at = take(&mut pos, ty.size(), &format!("{} row {r}", el.name))?;
                        row.push(ty.read_le(&bytes[at..]));
                    }
                    Property::List { count, item } => {
                        let at = take(&mut pos, count.size(), &format!("{} row {r}", el.name))?;
                        let n = count.read_le(&bytes[at..]);
                        if n < 0.0 {
                            return Err((at as u64, "negative list length".into()));
                        }
                        take(&mut pos, n as usize * item.size(), &format!("{} row {r}", el.name))?;
                        row.push(f64::NAN);
                    }
                }
            }
            if Some(ei) == vertex {
                sink.push(&row, layout.expect("vertex layout"));
            }
        }
    }
    Ok(())
}

fn header_text(cloud: &PointCloud, format: &str, scalar: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "ply\nformat {format} 1.0\nelement vertex {}", cloud.len());
    for axis in ["x", "y", "z"] {
        let _ = writeln!(h, "property {scalar} {axis}");
    }
    if cloud.colors().is_some() {
        h.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    h.push_str("end_header\n");
    h
}

pub(super) fn encode_binary(cloud: &PointCloud) -> Vec<u8> {
    let mut out = header_text(cloud, "binary_little_endian", "double").into_bytes();
    out.reserve(cloud.len() * 27);
    for (i, p) in cloud.points().iter().enumerate() {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(c) = cloud.colors() {
            out.extend_from_slice(&c[i]);
        }
    }
    out
}

pub(super) fn encode_ascii(cloud: &PointCloud) -> Vec<u8> {
    let mut out = header_text(cloud, "ascii", "double");
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
        if let Some(c) = cloud.colors() {
            let _ = write!(out, " {} {} {}", c[i][0], c[i][1], c[i][2]);
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> ParseResult<LoadedCloud> {
        parse(s.as_bytes())
    }

    #[test]
    fn ascii_three_vertices() {
        let src = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0.5\n";
        let c = parse_str(src).unwrap().cloud;
        assert_eq!(c.len(), 3);
        assert!(c.colors().is_none());
        assert_eq!(c.points()[2], Point3::new(0.0, 1.0, 0.5));
    }

    #[test]
    fn zero_vertices_is_empty_cloud() {
        let src = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(parse_str(src).unwrap().cloud.is_empty());
    }

    #[test]
    fn short_body_reports_offset() {
        let mut src = String::from("ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
        for i in 0..7 {
            src.push_str(&format!("{i} 0 0\n"));
        }
        let (offset, msg) = parse_str(&src).unwrap_err();
        assert_eq!(offset as usize, src.len());
        assert!(msg.contains("found 7"), "{msg}");
    }

    #[test]
    fn truncated_binary_errors() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0); 4]);
        let mut bytes = encode_binary(&cloud);
        bytes.truncate(bytes.len() - 5);
        let (offset, _) = parse(&bytes).unwrap_err();
        assert_eq!(offset as usize, bytes.len());
    }

    #[test]
    fn non_finite_rows_are_counted_and_dropped() {
        let src = "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nend_header\n0 0 0\nnan 1 1\n2 inf 2\n";
        let loaded = parse_str(src).unwrap();
        assert_eq!(loaded.cloud.len(), 1);
        assert_eq!(loaded.skipped_non_finite, 2);
    }

    #[test]
    fn binary_float32_with_extra_props_and_faces() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for (p, c) in [([1.5f32, -2.0, 0.25], [10u8, 20, 30]), ([0.0, 0.0, 9.0], [255, 0, 1])] {
            for v in p {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            bytes.extend_from_slice(&7.0f32.to_le_bytes());
            bytes.extend_from_slice(&c);
        }
        bytes.push(3);
        for i in [0i32, 1, 1] {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        let c = parse(&bytes).unwrap().cloud;
        assert_eq!(c.points(), &[Point3::new(1.5, -2.0, 0.25), Point3::new(0.0, 0.0, 9.0)]);
        assert_eq!(c.colors().unwrap(), &[[10, 20, 30], [255, 0, 1]]);
    }

    #[test]
    fn element_before_vertex_is_skipped() {
        let src = "ply\nformat ascii 1.0\nelement camera 1\nproperty float fx\nproperty list uchar float k\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n500 2 0.1 0.2\n4 5 6\n";
        let c = parse_str(src).unwrap().cloud;
        assert_eq!(c.points(), &[Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn big_endian_rejected() {
        let src = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        let (offset, msg) = parse_str(src).unwrap_err();
        assert_eq!(offset, 4);
        assert!(msg.contains("binary_big_endian"));
    }

    #[test]
    fn missing_coordinate_property() {
        let src = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n";
        assert!(parse_str(src).unwrap_err().1.contains("'z'"));
    }
}
