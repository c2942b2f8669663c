use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ring::AttrKind;

use super::bitmap::Bitmap;
use super::schema::Schema;
use super::table::{Column, ColumnData, Table};

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Assign category codes in sorted text order instead of first-seen order.
    pub sorted_dictionaries: bool,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WriteOptions {
    /// Write originally missing cells as empty fields instead of their
    /// current values.
    pub blank_missing: bool,
    /// Also write a 0/1 mask file next to the output.
    pub emit_mask: bool,
}

enum Builder {
    Num(Vec<f64>),
    Cat {
        codes: Vec<u32>,
        dict: Vec<String>,
        lookup: HashMap<String, u32>,
    },
}

pub fn load_csv(path: &Path, schema: &Schema, opts: LoadOptions) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, opts).map_err(|e| e.context(path.display().to_string()))
}

pub fn read_csv<R: Read>(input: R, schema: &Schema, opts: LoadOptions) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("cannot read header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let expected: Vec<&str> = schema.columns().iter().map(|c| c.name.as_str()).collect();
    if names != expected {
        return Err(Error::data(format!(
            "header {names:?} does not match schema columns {expected:?}"
        )));
    }

    let mut builders: Vec<Builder> = schema
        .columns()
        .iter()
        .map(|c| match c.kind {
            AttrKind::Continuous => Builder::Num(Vec::new()),
            AttrKind::Categorical => Builder::Cat {
                codes: Vec::new(),
                dict: Vec::new(),
                lookup: HashMap::new(),
            },
        })
        .collect();
    let mut missing: Vec<Vec<bool>> = vec![Vec::new(); schema.len()];

    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(Error::data(format!("row {}: {e}", row + 1))),
        }
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            let def = &schema.columns()[col];
            let empty = field.is_empty();
            missing[col].push(empty);
            match &mut builders[col] {
                Builder::Num(v) => {
                    if empty {
                        v.push(f64::NAN);
                    } else {
                        let x: f64 = field.parse().map_err(|_| {
                            Error::data(format!(
                                "row {}, column '{}': cannot parse '{field}' as a number",
                                row + 1,
                                def.name
                            ))
                        })?;
                        if !x.is_finite() {
                            return Err(Error::data(format!(
                                "row {}, column '{}': non-finite value '{field}'",
                                row + 1,
                                def.name
                            )));
                        }
                        v.push(x);
                    }
                }
                Builder::Cat { codes, dict, lookup } => {
                    if empty {
                        codes.push(0);
                    } else {
                        let code = match lookup.get(field) {
                            Some(&c) => c,
                            None => {
                                let c = dict.len() as u32;
                                dict.push(field.to_string());
                                lookup.insert(field.to_string(), c);
                                c
                            }
                        };
                        codes.push(code);
                    }
                }
            }
        }
        row += 1;
    }

    let mut columns = Vec::with_capacity(builders.len());
    for (b, miss) in builders.into_iter().zip(&missing) {
        columns.push(match b {
            Builder::Num(v) => Column::continuous(v),
            Builder::Cat { codes, dict, .. } => {
                if opts.sorted_dictionaries {
                    let (codes, dict) = sort_dictionary(codes, dict, miss);
                    Column::with_dictionary(codes, dict)
                } else {
                    Column::with_dictionary(codes, dict)
                }
            }
        });
    }
    let masks = missing.into_iter().map(Bitmap::from_bools).collect();
    Table::new(schema.clone(), columns, masks)
}

fn sort_dictionary(codes: Vec<u32>, dict: Vec<String>, miss: &[bool]) -> (Vec<u32>, Vec<String>) {
    let mut order: Vec<usize> = (0..dict.len()).collect();
    order.sort_by(|&a, &b| dict[a].cmp(&dict[b]));
    let mut remap = vec![0u32; dict.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new as u32;
    }
    let codes = codes
        .into_iter()
        .zip(miss)
        .map(|(c, &m)| if m { 0 } else { remap[c as usize] })
        .collect();
    let dict = order.into_iter().map(|i| dict[i].clone()).collect();
    (codes, dict)
}

/// Path of the mask file written next to `path`.
pub fn mask_path(path: &Path) -> PathBuf {
    path.with_extension("mask.csv")
}

pub fn write_csv(table: &Table, path: &Path, opts: WriteOptions) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_table(table, &mut out, opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))?;
    if opts.emit_mask {
        let mpath = mask_path(path);
        let file = File::create(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let mut out = BufWriter::new(file);
        write_mask(table, &mut out).map_err(|e| Error::io(&mpath, e))?;
        out.flush().map_err(|e| Error::io(&mpath, e))?;
    }
    Ok(())
}

pub fn write_table<W: Write>(table: &Table, out: W, opts: WriteOptions) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<output>", e),
        other => Error::data(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.schema().columns().iter().map(|c| c.name.as_str()))
        .map_err(io)?;
    let ncols = table.schema().len();
    let mut fields = vec![String::new(); ncols];
    for r in 0..table.rows() {
        for (c, field) in fields.iter_mut().enumerate() {
            field.clear();
            if opts.blank_missing && table.mask(c).get(r) {
                continue;
            }
            let col = table.column(c);
            match &col.data {
                ColumnData::Continuous(v) if v[r].is_nan() => {}
                _ => field.push_str(&col.render(r)),
            }
        }
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

fn write_mask<W: Write>(table: &Table, mut out: W) -> std::io::Result<()> {
    let names: Vec<&str> = table.schema().columns().iter().map(|c| c.name.as_str()).collect();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&names)?;
    let mut fields = vec!["0"; names.len()];
    for r in 0..table.rows() {
        for (c, f) in fields.iter_mut().enumerate() {
            *f = if table.mask(c).get(r) { "1" } else { "0" };
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
