//! Loading categorical tables and basket files into transactions of
//! interned items, plus the dataset-wide support counts that drive the
//! frequency order of the tree.
//!
//! A tabular record becomes one transaction whose items are
//! `(column, value)` pairs, so the same token in two different columns
//! yields two distinct items. The label column is kept as metadata and
//! never becomes an item.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense identifier of an interned [`Item`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An attribute-value pair. Ordering is by attribute, then value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item {
    pub attribute: usize,
    pub value: String,
}

impl Item {
    pub fn new(attribute: usize, value: impl Into<String>) -> Self {
        Self {
            attribute,
            value: value.into(),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// Bijection between items and their ids. Ids are handed out in order of
/// first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ItemDictionary {
    items: Vec<Item>,
    index: HashMap<Item, ItemId>,
}

impl ItemDictionary {
    pub fn intern(&mut self, item: Item) -> ItemId {
        if let Some(&id) = self.index.get(&item) {
            return id;
        }
        let id = ItemId(self.items.len() as u32);
        self.items.push(item.clone());
        self.index.insert(item, id);
        id
    }

    pub fn get(&self, item: &Item) -> Option<ItemId> {
        self.index.get(item).copied()
    }

    pub fn item(&self, id: ItemId) -> Option<&Item> {
        self.items.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, &Item)> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| (ItemId(i as u32), item))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub id: usize,
    /// Sorted by id, no duplicates, never empty.
    pub items: Vec<ItemId>,
    pub label: Option<String>,
}

impl Transaction {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

/// Where the class label lives in a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    None,
    Index(usize),
    Last,
}

/// How to turn delimited records into transactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Format {
    pub delimiter: u8,
    pub has_header: bool,
    pub label: LabelColumn,
    pub ignored: BTreeSet<usize>,
    /// Tokens dropped instead of becoming items. Empty by default, so a
    /// `?` in the source is an ordinary value.
    pub missing_tokens: Vec<String>,
}

impl Default for Format {
    fn default() -> Self {
        Self::csv()
    }
}

impl Format {
    /// Comma separated, no header, no label.
    pub fn csv() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
            label: LabelColumn::None,
            ignored: BTreeSet::new(),
            missing_tokens: Vec::new(),
        }
    }

    /// `agaricus-lepiota.data`: class in column 0, 22 attributes after it.
    pub fn uci_mushroom() -> Self {
        Self {
            label: LabelColumn::Index(0),
            ..Self::csv()
        }
    }

    /// `zoo.data`: animal name in column 0 (dropped), type in the last column.
    pub fn uci_zoo() -> Self {
        Self {
            label: LabelColumn::Last,
            ignored: BTreeSet::from([0]),
            ..Self::csv()
        }
    }

    fn label_index(&self, width: usize) -> Option<usize> {
        match self.label {
            LabelColumn::None => None,
            LabelColumn::Index(i) => Some(i),
            LabelColumn::Last => width.checked_sub(1),
        }
    }
}

/// Accumulates transactions while interning their items.
#[derive(Debug, Clone, Default)]
pub struct DatasetBuilder {
    dictionary: ItemDictionary,
    transactions: Vec<Transaction>,
    attributes: Option<Vec<usize>>,
}

impl DatasetBuilder {
    /// Builder for free-form baskets; every item gets attribute 0.
    pub fn baskets() -> Self {
        Self::default()
    }

    /// Builder for rows of a table whose retained columns are `attributes`.
    pub fn tabular(attributes: Vec<usize>) -> Self {
        Self {
            attributes: Some(attributes),
            ..Self::default()
        }
    }

    pub fn push<I>(&mut self, items: I, label: Option<String>) -> Result<usize>
    where
        I: IntoIterator<Item = Item>,
    {
        let id = self.transactions.len();
        let mut ids: Vec<ItemId> = items
            .into_iter()
            .map(|item| self.dictionary.intern(item))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::EmptyTransaction { record: id + 1 });
        }
        self.transactions.push(Transaction {
            id,
            items: ids,
            label,
        });
        Ok(id)
    }

    /// Pushes a basket of item tokens, all under attribute 0.
    pub fn push_basket<I, S>(&mut self, tokens: I, label: Option<&str>) -> Result<usize>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.push(
            tokens.into_iter().map(|t| Item::new(0, t.as_ref())),
            label.map(str::to_owned),
        )
    }

    pub fn finish(self) -> Result<TransactionDataset> {
        if self.transactions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let label_domain = self
            .transactions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        Ok(TransactionDataset {
            transactions: self.transactions,
            dictionary: self.dictionary,
            attributes: self.attributes,
            label_domain,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDataset {
    transactions: Vec<Transaction>,
    dictionary: ItemDictionary,
    attributes: Option<Vec<usize>>,
    label_domain: BTreeSet<String>,
}

impl TransactionDataset {
    /// Reads a delimited file.
    pub fn ingest(path: impl AsRef<Path>, format: &Format) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, format)
    }

    pub fn from_reader<R: Read>(reader: R, format: &Format) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .delimiter(format.delimiter)
            .has_headers(format.has_header)
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record?;
            rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
        }
        Self::from_rows(rows, format)
    }

    /// Builds a dataset from already split records.
    pub fn from_rows<I, R, S>(rows: I, format: &Format) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut builder: Option<(DatasetBuilder, usize)> = None;
        for (n, row) in rows.into_iter().enumerate() {
            let row: Vec<S> = row.into_iter().collect();
            let width = row.len();
            let label_col = format.label_index(width);
            let (builder, expected) = builder.get_or_insert_with(|| {
                let attributes = (0..width)
                    .filter(|c| Some(*c) != label_col && !format.ignored.contains(c))
                    .collect();
                (DatasetBuilder::tabular(attributes), width)
            });
            if width != *expected {
                return Err(Error::ColumnCount {
                    record: n + 1,
                    expected: *expected,
                    found: width,
                });
            }
            let label = match label_col {
                Some(c) if c < width => Some(row[c].as_ref().trim().to_owned()),
                Some(c) => {
                    return Err(Error::MissingLabelColumn {
                        record: n + 1,
                        column: c,
                    })
                }
                None => None,
            };
            let items = row.iter().enumerate().filter_map(|(c, v)| {
                let v = v.as_ref().trim();
                let keep = Some(c) != label_col
                    && !format.ignored.contains(&c)
                    && !format.missing_tokens.iter().any(|m| m == v);
                keep.then(|| Item::new(c, v))
            });
            builder
                .push(items, label)
                .map_err(|_| Error::EmptyTransaction { record: n + 1 })?;
        }
        match builder {
            Some((b, _)) => b.finish(),
            None => Err(Error::EmptyDataset),
        }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn transaction(&self, id: usize) -> Option<&Transaction> {
        self.transactions.get(id)
    }

    pub fn dictionary(&self) -> &ItemDictionary {
        &self.dictionary
    }

    pub fn label_domain(&self) -> &BTreeSet<String> {
        &self.label_domain
    }

    /// Retained source columns, for datasets read from a table.
    pub fn attributes(&self) -> Option<&[usize]> {
        self.attributes.as_deref()
    }

    pub fn total_items(&self) -> usize {
        self.transactions.iter().map(Transaction::len).sum()
    }

    /// Label of every transaction, or an error naming the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<&str>> {
        if self.label_domain.is_empty() {
            return Err(Error::Unlabeled);
        }
        self.transactions
            .iter()
            .map(|t| t.label.as_deref().ok_or(Error::MissingLabel(t.id)))
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        !self.label_domain.is_empty() && self.transactions.iter().all(|t| t.label.is_some())
    }

    /// Human readable name of an item.
    pub fn item_name(&self, id: ItemId) -> String {
        self.dictionary
            .item(id)
            .map(|item| {
                if self.attributes.is_some() {
                    item.to_string()
                } else {
                    item.value.clone()
                }
            })
            .unwrap_or_else(|| id.to_string())
    }

    /// Dataset made of the given transactions, in the given order, with
    /// ids renumbered densely. The item dictionary is shared unchanged.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let mut transactions = Vec::with_capacity(ids.len());
        for (pos, &id) in ids.iter().enumerate() {
            let t = self
                .transactions
                .get(id)
                .ok_or_else(|| Error::InvalidClustering(format!("no transaction {id}")))?;
            transactions.push(Transaction {
                id: pos,
                items: t.items.clone(),
                label: t.label.clone(),
            });
        }
        if transactions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let label_domain = transactions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        Ok(Self {
            transactions,
            dictionary: self.dictionary.clone(),
            attributes: self.attributes.clone(),
            label_domain,
        })
    }

    /// Integer-coded attribute rows. Codes are assigned per attribute in
    /// order of first appearance. Only available for tables where every
    /// record kept a value for every retained column.
    pub fn attribute_table(&self) -> Result<AttributeTable> {
        let attributes = self
            .attributes
            .as_ref()
            .ok_or_else(|| Error::NoAttributeTable("dataset was not read from a table".into()))?;
        let column_of: HashMap<usize, usize> = attributes
            .iter()
            .enumerate()
            .map(|(j, &c)| (c, j))
            .collect();
        let mut codes: Vec<HashMap<ItemId, u32>> = vec![HashMap::new(); attributes.len()];
        let mut rows = Vec::with_capacity(self.len());
        for t in &self.transactions {
            if t.len() != attributes.len() {
                return Err(Error::NoAttributeTable(format!(
                    "transaction {} has {} of {} attributes",
                    t.id,
                    t.len(),
                    attributes.len()
                )));
            }
            let mut row = vec![0u32; attributes.len()];
            // Items are sorted by id, not by column, so place each by column.
            for &id in &t.items {
                let item = &self.dictionary.items[id.index()];
                let j = column_of[&item.attribute];
                let next = codes[j].len() as u32;
                row[j] = *codes[j].entry(id).or_insert(next);
            }
            rows.push(row);
        }
        Ok(AttributeTable {
            rows,
            attributes: attributes.len(),
        })
    }
}

/// Per-transaction integer codes, one column per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeTable {
    pub rows: Vec<Vec<u32>>,
    pub attributes: usize,
}

impl AttributeTable {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let attributes = rows.first().map_or(0, Vec::len);
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != attributes) {
            return Err(Error::NoAttributeTable(format!(
                "row {i} does not have {attributes} values"
            )));
        }
        Ok(Self { rows, attributes })
    }
}

/// Dataset-wide support of every item, indexed by [`ItemId`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    support: Vec<u32>,
}

impl FrequencyTable {
    pub fn support(&self, item: ItemId) -> Option<u32> {
        self.support.get(item.index()).copied().filter(|&s| s > 0)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.support.iter().map(|&s| u64::from(s)).sum()
    }

    /// `(item, support)` for every item that occurs.
    pub fn iter(&self) -> impl Iterator<Item = (ItemId, u32)> + '_ {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(i, &s)| (ItemId(i as u32), s))
    }
}

pub fn compute_frequencies(dataset: &TransactionDataset) -> FrequencyTable {
    let mut support = vec![0u32; dataset.dictionary().len()];
    for t in dataset.transactions() {
        for &item in &t.items {
            support[item.index()] += 1;
        }
    }
    FrequencyTable { support }
}

/// Global item order: support descending, ties broken by the item itself
/// (attribute, then value). The tie-break depends only on content, so a
/// reordered input produces the same order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemOrder {
    rank: Vec<u32>,
    by_rank: Vec<ItemId>,
}

impl ItemOrder {
    pub fn new(freqs: &FrequencyTable, dictionary: &ItemDictionary) -> Self {
        let mut by_rank: Vec<ItemId> = freqs.iter().map(|(id, _)| id).collect();
        by_rank.sort_by(|&a, &b| {
            let sa = freqs.support[a.index()];
            let sb = freqs.support[b.index()];
            sb.cmp(&sa)
                .then_with(|| dictionary.item(a).cmp(&dictionary.item(b)))
                .then(a.cmp(&b))
        });
        let mut rank = vec![u32::MAX; freqs.len()];
        for (r, id) in by_rank.iter().enumerate() {
            rank[id.index()] = r as u32;
        }
        Self { rank, by_rank }
    }

    pub fn rank(&self, item: ItemId) -> Option<u32> {
        self.rank
            .get(item.index())
            .copied()
            .filter(|&r| r != u32::MAX)
    }

    /// Items from most to least frequent.
    pub fn items(&self) -> &[ItemId] {
        &self.by_rank
    }

    pub fn sort(&self, items: &[ItemId]) -> Result<Vec<ItemId>> {
        let mut keyed = items
            .iter()
            .map(|&i| self.rank(i).map(|r| (r, i)).ok_or(Error::UnknownItem(i)))
            .collect::<Result<Vec<_>>>()?;
        keyed.sort_unstable();
        Ok(keyed.into_iter().map(|(_, i)| i).collect())
    }
}

/// The transaction's items in descending support order.
pub fn sort_items(transaction: &Transaction, order: &ItemOrder) -> Result<Vec<ItemId>> {
    order.sort(&transaction.items)
}
