//! Tree detections and ground-truth annotations.
//!
//! Boxes use continuous edges in image coordinates (y down): a box spanning
//! `[x_min, x_max] x [y_min, y_max]` has area `(x_max - x_min) * (y_max - y_min)`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidBox(format!(
                "({}, {}, {}, {})",
                self.x_min, self.y_min, self.x_max, self.y_max
            )));
        }
        Ok(())
    }

    /// Square box of side `sqrt(area)` centred on `(cx, cy)`.
    pub fn centered_square(cx: f64, cy: f64, area: f64) -> Self {
        let half = area.sqrt() / 2.0;
        Self {
            x_min: cx - half,
            y_min: cy - half,
            x_max: cx + half,
            y_max: cy + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }
}

/// Intersection-over-union of two valid boxes; 0 when they do not overlap.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let ih = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeClass {
    Infected,
    Healthy,
}

impl TreeClass {
    pub const ALL: [TreeClass; 2] = [TreeClass::Infected, TreeClass::Healthy];

    pub fn as_str(self) -> &'static str {
        match self {
            TreeClass::Infected => "infected",
            TreeClass::Healthy => "healthy",
        }
    }

    /// Maps an annotation label to a class, accepting the usual synonyms.
    pub fn from_label(label: &str) -> Option<Self> {
        match label.trim().to_ascii_lowercase().as_str() {
            "infected" | "dead" | "disease" => Some(TreeClass::Infected),
            "healthy" | "normal" => Some(TreeClass::Healthy),
            _ => None,
        }
    }
}

impl fmt::Display for TreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreeClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "infected" => Ok(TreeClass::Infected),
            "healthy" => Ok(TreeClass::Healthy),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BBox,
    pub cls: TreeClass,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub image_id: String,
    pub bbox: BBox,
    pub cls: TreeClass,
}

impl From<&Detection> for Annotation {
    fn from(d: &Detection) -> Self {
        Self {
            image_id: d.image_id.clone(),
            bbox: d.bbox,
            cls: d.cls,
        }
    }
}

/// Anything with a box and a class label.
pub trait Labelled {
    fn bbox(&self) -> &BBox;
    fn class(&self) -> TreeClass;
}

impl Labelled for Detection {
    fn bbox(&self) -> &BBox {
        &self.bbox
    }
    fn class(&self) -> TreeClass {
        self.cls
    }
}

impl Labelled for Annotation {
    fn bbox(&self) -> &BBox {
        &self.bbox
    }
    fn class(&self) -> TreeClass {
        self.cls
    }
}

/// A tree reduced to its box centre, class and crown-size proxy (box area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub x: f64,
    pub y: f64,
    pub cls: TreeClass,
    pub area: f64,
}

impl TreePoint {
    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

pub fn to_points<T: Labelled>(items: &[T]) -> Vec<TreePoint> {
    items
        .iter()
        .map(|it| {
            let b = it.bbox();
            let (x, y) = b.center();
            TreePoint {
                x,
                y,
                cls: it.class(),
                area: b.area(),
            }
        })
        .collect()
}

pub fn points_of_class(points: &[TreePoint], cls: TreeClass) -> Vec<TreePoint> {
    points.iter().filter(|p| p.cls == cls).copied().collect()
}

// ---------------------------------------------------------------------------
// CSV

const DET_HEADER: [&str; 7] = ["image_id", "class", "score", "x_min", "y_min", "x_max", "y_max"];

/// Records parsed from a CSV file; which variant depends on `with_scores`.
#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Detections(Vec<Detection>),
    Annotations(Vec<Annotation>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Detections(d) => d.len(),
            Records::Annotations(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<TreePoint> {
        match self {
            Records::Detections(d) => to_points(d),
            Records::Annotations(a) => to_points(a),
        }
    }

    pub fn into_annotations(self) -> Vec<Annotation> {
        match self {
            Records::Detections(d) => d.iter().map(Annotation::from).collect(),
            Records::Annotations(a) => a,
        }
    }
}

/// Whether a CSV header carries a `score` column.
pub fn csv_has_scores(path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    Ok(headers.iter().any(|h| h.trim() == "score"))
}

fn csv_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn load_csv(path: impl AsRef<Path>, with_scores: bool) -> Result<Records> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let required: Vec<&str> = DET_HEADER
        .iter()
        .copied()
        .filter(|h| with_scores || *h != "score")
        .collect();
    let mut col = [usize::MAX; 7];
    for (slot, name) in col.iter_mut().zip(DET_HEADER) {
        if let Some(i) = headers.iter().position(|h| h == name) {
            *slot = i;
        } else if required.contains(&name) {
            return Err(csv_err(path, format!("missing column {name:?}")));
        }
    }

    let mut dets = Vec::new();
    let mut anns = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |k: usize| {
            rec.get(col[k])
                .ok_or_else(|| csv_err(path, format!("line {line}: missing field {:?}", DET_HEADER[k])))
        };
        let num = |k: usize| -> Result<f64> {
            let s = field(k)?;
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| csv_err(path, format!("line {line}: non-numeric {} {s:?}", DET_HEADER[k])))
        };
        let image_id = field(0)?.to_string();
        let label = field(1)?;
        let cls = TreeClass::from_label(label).ok_or_else(|| Error::UnknownClass {
            path: path.to_path_buf(),
            line,
            label: label.to_string(),
        })?;
        let bbox =
            BBox::new(num(3)?, num(4)?, num(5)?, num(6)?).map_err(|e| csv_err(path, format!("line {line}: {e}")))?;
        if with_scores {
            let score = num(2)?;
            if !(0.0..=1.0).contains(&score) {
                return Err(csv_err(path, format!("line {line}: score {score} outside [0, 1]")));
            }
            dets.push(Detection {
                image_id,
                bbox,
                cls,
                score,
            });
        } else {
            anns.push(Annotation { image_id, bbox, cls });
        }
    }
    Ok(if with_scores {
        Records::Detections(dets)
    } else {
        Records::Annotations(anns)
    })
}

/// Loads a CSV, choosing detections or annotations from its header.
pub fn load_csv_auto(path: impl AsRef<Path>) -> Result<Records> {
    let path = path.as_ref();
    load_csv(path, csv_has_scores(path)?)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    crate::canon::write_atomic(path, body.as_bytes())
}

pub fn detections_to_csv(dets: &[Detection]) -> String {
    let mut s = DET_HEADER.join(",");
    s.push('\n');
    for d in dets {
        let b = &d.bbox;
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.image_id, d.cls, d.score, b.x_min, b.y_min, b.x_max, b.y_max
        ));
    }
    s
}

pub fn annotations_to_csv(anns: &[Annotation]) -> String {
    let mut s = String::from("image_id,class,x_min,y_min,x_max,y_max\n");
    for a in anns {
        let b = &a.bbox;
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            a.image_id, a.cls, b.x_min, b.y_min, b.x_max, b.y_max
        ));
    }
    s
}

pub fn save_detections_csv(dets: &[Detection], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &detections_to_csv(dets))
}

pub fn save_annotations_csv(anns: &[Annotation], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &annotations_to_csv(anns))
}

// ---------------------------------------------------------------------------
// Pascal-VOC XML (as written by LabelImg)

/// Parses one VOC annotation file. The image id is the file stem.
pub fn load_voc_xml(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let image_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_voc(path, &text, &image_id)
}

fn child<'a, 'i>(n: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(tag))
}

pub(crate) fn parse_voc(path: &Path, text: &str, image_id: &str) -> Result<Vec<Annotation>> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::format(path, e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("annotation") {
        return Err(Error::format(
            path,
            format!("root element is <{}>, expected <annotation>", root.tag_name().name()),
        ));
    }
    let line_of = |n: roxmltree::Node| doc.text_pos_at(n.range().start).row as usize;

    let mut out = Vec::new();
    for obj in root.children().filter(|n| n.has_tag_name("object")) {
        let name_node = child(obj, "name")
            .ok_or_else(|| Error::format(path, format!("line {}: <object> without <name>", line_of(obj))))?;
        let label = name_node.text().unwrap_or("").trim();
        let cls = TreeClass::from_label(label).ok_or_else(|| Error::UnknownClass {
            path: path.to_path_buf(),
            line: line_of(name_node),
            label: label.to_string(),
        })?;
        let bnd = child(obj, "bndbox")
            .ok_or_else(|| Error::format(path, format!("line {}: <object> without <bndbox>", line_of(obj))))?;
        let coord = |tag: &str| -> Result<f64> {
            let node = child(bnd, tag)
                .ok_or_else(|| Error::format(path, format!("line {}: <bndbox> missing <{tag}>", line_of(bnd))))?;
            let t = node.text().unwrap_or("").trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(path, format!("line {}: bad <{tag}> value {t:?}", line_of(node))))
        };
        let bbox = BBox::new(coord("xmin")?, coord("ymin")?, coord("xmax")?, coord("ymax")?)
            .map_err(|e| Error::format(path, format!("line {}: {e}", line_of(bnd))))?;
        out.push(Annotation {
            image_id: image_id.to_string(),
            bbox,
            cls,
        });
    }
    Ok(out)
}

/// Loads every `*.xml` in a directory, sorted by file name.
pub fn load_voc_dir(dir: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let dir = dir.as_ref();
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(load_voc_xml(&f)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn iou_cases() {
        assert_eq!(iou(&b(0., 0., 2., 2.), &b(0., 0., 2., 2.)), 1.0);
        assert_eq!(iou(&b(0., 0., 1., 1.), &b(2., 2., 3., 3.)), 0.0);
        assert_eq!(iou(&b(0., 0., 1., 1.), &b(1., 0., 2., 1.)), 0.0);
        assert!((iou(&b(0., 0., 2., 2.), &b(1., 1., 3., 3.)) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_boxes() {
        assert!(BBox::new(1., 0., 1., 2.).is_err());
        assert!(BBox::new(0., 3., 1., 2.).is_err());
        assert!(BBox::new(0., f64::NAN, 1., 2.).is_err());
    }

    #[test]
    fn points_from_boxes() {
        let anns = vec![
            Annotation {
                image_id: "a".into(),
                bbox: b(0., 0., 10., 10.),
                cls: TreeClass::Healthy,
            },
            Annotation {
                image_id: "a".into(),
                bbox: b(2., 4., 6., 8.),
                cls: TreeClass::Infected,
            },
        ];
        let p = to_points(&anns);
        assert_eq!((p[0].x, p[0].y, p[0].area), (5., 5., 100.));
        assert_eq!((p[1].x, p[1].y, p[1].area), (4., 6., 16.));
        assert!(to_points::<Annotation>(&[]).is_empty());
    }

    #[test]
    fn label_synonyms() {
        for s in ["infected", "Dead", "DISEASE", " infected "] {
            assert_eq!(TreeClass::from_label(s), Some(TreeClass::Infected));
        }
        for s in ["healthy", "Normal"] {
            assert_eq!(TreeClass::from_label(s), Some(TreeClass::Healthy));
        }
        assert_eq!(TreeClass::from_label("shrub"), None);
    }

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_detection_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "d.csv",
            "image_id,class,score,x_min,y_min,x_max,y_max\nimg1,infected,0.93,5,5,50,60\n",
        );
        let Records::Detections(d) = load_csv(&p, true).unwrap() else {
            panic!()
        };
        assert_eq!(
            d,
            vec![Detection {
                image_id: "img1".into(),
                bbox: b(5., 5., 50., 60.),
                cls: TreeClass::Infected,
                score: 0.93,
            }]
        );
        assert!(csv_has_scores(&p).unwrap());
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "a.csv",
            "image_id,class,score,x_min,y_min,x_max,y_max\nimg1,infected,1.5,5,5,50,60\n",
        );
        assert!(load_csv(&p, true).unwrap_err().to_string().contains("outside [0, 1]"));
        let p = write_tmp(&dir, "b.csv", "image_id,class,x_min,y_min,x_max\n");
        assert!(load_csv(&p, false).unwrap_err().to_string().contains("y_max"));
        let p = write_tmp(
            &dir,
            "c.csv",
            "image_id,class,x_min,y_min,x_max,y_max\na,healthy,1,2,x,4\n",
        );
        assert!(load_csv(&p, false).unwrap_err().to_string().contains("non-numeric"));
        let p = write_tmp(
            &dir,
            "d.csv",
            "image_id,class,x_min,y_min,x_max,y_max\na,healthy,1,2,3,4\n",
        );
        assert!(load_csv(&p, true).is_err());
        let p = write_tmp(
            &dir,
            "e.csv",
            "image_id,class,x_min,y_min,x_max,y_max\na,tree,1,2,3,4\n",
        );
        assert!(matches!(load_csv(&p, false), Err(Error::UnknownClass { line: 2, .. })));
    }

    #[test]
    fn csv_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "h.csv", "image_id,class,score,x_min,y_min,x_max,y_max\n");
        assert!(load_csv(&p, true).unwrap().is_empty());
        let p = write_tmp(&dir, "g.csv", "image_id,class,x_min,y_min,x_max,y_max\n");
        assert!(load_csv(&p, false).unwrap().is_empty());
    }

    const VOC: &str = r#"<annotation>
	<folder>tiles</folder>
	<filename>t_0_0.jpg</filename>
	<size><width>1024</width><height>1024</height><depth>3</depth></size>
	<object>
		<name>infected</name>
		<pose>Unspecified</pose>
		<truncated>0</truncated>
		<difficult>0</difficult>
		<bndbox><xmin>10</xmin><ymin>20</ymin><xmax>30</xmax><ymax>40</ymax></bndbox>
	</object>
</annotation>"#;

    #[test]
    fn voc_single_object() {
        let a = parse_voc(Path::new("t.xml"), VOC, "t").unwrap();
        assert_eq!(
            a,
            vec![Annotation {
                image_id: "t".into(),
                bbox: b(10., 20., 30., 40.),
                cls: TreeClass::Infected
            }]
        );
    }

    #[test]
    fn voc_empty_and_errors() {
        assert!(parse_voc(Path::new("e.xml"), "<annotation></annotation>", "e")
            .unwrap()
            .is_empty());
        let err = parse_voc(Path::new("s.xml"), &VOC.replace(">infected<", ">shrub<"), "s").unwrap_err();
        assert!(
            matches!(&err, Error::UnknownClass { line: 6, label, .. } if label == "shrub"),
            "{err}"
        );
        assert!(err.to_string().contains("shrub"));
        assert!(parse_voc(Path::new("m.xml"), "<annotation><object>", "m").is_err());
        let inverted = VOC.replace("<xmin>10</xmin>", "<xmin>50</xmin>");
        assert!(parse_voc(Path::new("i.xml"), &inverted, "i").is_err());
    }

    #[test]
    fn voc_dir_uses_file_stems() {
        let dir = tempfile::tempdir().unwrap();
        write_tmp(&dir, "b.xml", VOC);
        write_tmp(&dir, "a.xml", &VOC.replace("infected", "healthy"));
        write_tmp(&dir, "notes.txt", "ignore");
        let a = load_voc_dir(dir.path()).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!((a[0].image_id.as_str(), a[0].cls), ("a", TreeClass::Healthy));
        assert_eq!(a[1].image_id, "b");
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-100.0..100.0f64, -100.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64).prop_map(|(x, y, w, h)| BBox {
            x_min: x,
            y_min: y,
            x_max: x + w,
            y_max: y + h,
        })
    }

    fn arb_det() -> impl Strategy<Value = Detection> {
        (arb_box(), any::<bool>(), 0.0..=1.0f64, "[a-z0-9_]{1,8}").prop_map(|(bbox, inf, score, id)| Detection {
            image_id: id,
            bbox,
            cls: if inf { TreeClass::Infected } else { TreeClass::Healthy },
            score,
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_bounded_translation_invariant(a in arb_box(), c in arb_box(), dx in -10i32..10, dy in -10i32..10) {
            let v = iou(&a, &c);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert_eq!(iou(&a, &a), 1.0);
            let (dx, dy) = (f64::from(dx) * 0.5, f64::from(dy) * 0.5);
            prop_assert!((iou(&a.translate(dx, dy), &c.translate(dx, dy)) - v).abs() < 1e-9);
        }

        #[test]
        fn csv_roundtrip(dets in proptest::collection::vec(arb_det(), 0..20)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.csv");
            save_detections_csv(&dets, &p).unwrap();
            prop_assert_eq!(load_csv(&p, true).unwrap(), Records::Detections(dets.clone()));
            let anns: Vec<Annotation> = dets.iter().map(Annotation::from).collect();
            save_annotations_csv(&anns, &p).unwrap();
            prop_assert_eq!(load_csv_auto(&p).unwrap(), Records::Annotations(anns));
        }
    }
}
