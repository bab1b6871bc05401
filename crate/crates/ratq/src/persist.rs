//! On-disk encoded blocks: `<stem>.bin` holds the packed bits, `<stem>.toml`
//! the header needed to rebuild the decoder.
//!
//! Seeds and set fingerprints are full 64-bit values, which TOML integers
//! cannot hold, so they are stored as `0x`-prefixed hex strings.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};

use ratq_core::adaptive::{LadderKind, RangeLadder};
use ratq_core::gain_shape::{aratq_decode, GainQuantizer, GainShapeBlock, GainShapeConfig};
use ratq_core::ratq::{rcs_decode, ratq_decode, EncodedBlock, RatqConfig, SubsampleSet, Transform};

pub const HEADER_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockHeader {
    pub format: u32,
    pub d: usize,
    pub padded_d: usize,
    /// Norm bound `B`; absent for the unrotated quantizer.
    pub bound: Option<f64>,
    pub rotated: bool,
    pub s: usize,
    pub k: u32,
    pub h: u32,
    pub m: f64,
    pub m0: f64,
    #[serde(with = "hex_u64")]
    pub seed: u64,
    #[serde(with = "hex_u64")]
    pub nonce: u64,
    /// Sampled fraction of the padded coordinates; 1 without subsampling.
    pub mu: f64,
    pub samples: Option<usize>,
    #[serde(default, with = "hex_u64_opt", skip_serializing_if = "Option::is_none")]
    pub set_hash: Option<u64>,
    pub bit_len: usize,
    pub gain: Option<GainHeader>,
}

/// Fields of an adaptive gain quantizer prefixed to the shape bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainHeader {
    pub base: f64,
    pub a_g: f64,
    pub h_g: u32,
    pub k_g: u32,
    pub r_g: usize,
}

impl BlockHeader {
    /// Header of a plain or subsampled RATQ block.
    pub fn for_ratq(cfg: &RatqConfig, nonce: u64, set: Option<&SubsampleSet>, bit_len: usize) -> anyhow::Result<Self> {
        let LadderKind::Tetra { m, m0 } = cfg.ladder().kind() else {
            bail!("RATQ blocks need a tetra ladder");
        };
        Ok(Self {
            format: HEADER_FORMAT,
            d: cfg.dim(),
            padded_d: cfg.padded_dim(),
            bound: cfg.norm_bound(),
            rotated: cfg.transform() == Transform::Hadamard,
            s: cfg.subvector_len(),
            k: cfg.levels(),
            h: cfg.ladder().len() as u32,
            m,
            m0,
            seed: cfg.seed(),
            nonce,
            mu: set.map_or(1.0, SubsampleSet::mu),
            samples: set.map(SubsampleSet::len),
            set_hash: set.map(SubsampleSet::fingerprint),
            bit_len,
            gain: None,
        })
    }

    /// Header of an A-RATQ block (adaptive gain only).
    pub fn for_gain_shape(cfg: &GainShapeConfig, nonce: u64, bit_len: usize) -> anyhow::Result<Self> {
        let GainQuantizer::Adaptive { ladder, levels } = cfg.gain() else {
            bail!("only adaptive gain quantizers are persisted");
        };
        let LadderKind::Geometric { base, ratio } = ladder.kind() else {
            bail!("the gain ladder must be geometric");
        };
        let set = cfg.subsample_set(nonce)?;
        let mut header = Self::for_ratq(cfg.shape(), nonce, set.as_ref(), bit_len)?;
        header.gain = Some(GainHeader {
            base,
            a_g: ratio,
            h_g: ladder.len() as u32,
            k_g: *levels,
            r_g: cfg.gain().bits(),
        });
        Ok(header)
    }

    pub fn ratq_config(&self) -> anyhow::Result<RatqConfig> {
        let ladder = RangeLadder::tetra(self.m, self.m0, self.h)?;
        let cfg = match (self.rotated, self.bound) {
            (true, Some(b)) => RatqConfig::new(self.d, b, self.s, self.k, ladder, self.seed)?,
            (false, None) => RatqConfig::unrotated(self.d, self.s, self.k, ladder, self.seed)?,
            _ => bail!("rotated blocks carry a norm bound and unrotated ones do not"),
        };
        ensure!(cfg.padded_dim() == self.padded_d, "padded dimension {} does not match d = {}", self.padded_d, self.d);
        Ok(cfg)
    }

    pub fn gain_shape_config(&self) -> anyhow::Result<Option<GainShapeConfig>> {
        let Some(g) = &self.gain else {
            return Ok(None);
        };
        let gain = GainQuantizer::adaptive(RangeLadder::geometric(g.base, g.a_g, g.h_g)?, g.k_g)?;
        ensure!(gain.bits() == g.r_g, "gain fields take {} bits, header says r_g = {}", gain.bits(), g.r_g);
        Ok(Some(GainShapeConfig::new(gain, self.ratq_config()?, self.samples)?))
    }

    fn subsample_set(&self) -> anyhow::Result<Option<SubsampleSet>> {
        let Some(n) = self.samples else {
            return Ok(None);
        };
        let set = SubsampleSet::draw(self.padded_d, n, self.seed, self.nonce)?;
        ensure!(
            Some(set.fingerprint()) == self.set_hash,
            "subsample set fingerprint mismatch: seed and nonce do not reproduce the stored set"
        );
        Ok(Some(set))
    }

    /// Decodes `bytes` with the quantizer this header describes.
    pub fn decode(&self, bytes: &[u8]) -> anyhow::Result<Vec<f64>> {
        if let Some(cfg) = self.gain_shape_config()? {
            self.subsample_set()?;
            let block = GainShapeBlock::from_bits(bytes, self.bit_len, &cfg)?;
            return Ok(aratq_decode(&block, &cfg, self.nonce)?);
        }
        let cfg = self.ratq_config()?;
        let mut layout = cfg.layout();
        let set = self.subsample_set()?;
        if let Some(set) = &set {
            layout.coordinates = set.len();
        }
        let block = EncodedBlock::from_parts(bytes.to_vec(), self.bit_len, layout)?;
        Ok(match set {
            Some(set) => rcs_decode(&block, &cfg, &set, self.nonce)?,
            None => ratq_decode(&block, &cfg, self.nonce)?,
        })
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

pub fn save_block(stem: &Path, header: &BlockHeader, bytes: &[u8]) -> anyhow::Result<()> {
    ensure!(
        bytes.len() == header.bit_len.div_ceil(8),
        "{} bytes cannot hold exactly {} bits",
        bytes.len(),
        header.bit_len
    );
    let bin = with_ext(stem, "bin");
    std::fs::write(&bin, bytes).with_context(|| format!("writing {}", bin.display()))?;
    let toml_path = with_ext(stem, "toml");
    let text = toml::to_string(header)?;
    std::fs::write(&toml_path, text).with_context(|| format!("writing {}", toml_path.display()))
}

pub fn load_block(stem: &Path) -> anyhow::Result<(BlockHeader, Vec<u8>)> {
    let toml_path = with_ext(stem, "toml");
    let text = std::fs::read_to_string(&toml_path).with_context(|| format!("reading {}", toml_path.display()))?;
    let header: BlockHeader = toml::from_str(&text).with_context(|| format!("parsing {}", toml_path.display()))?;
    ensure!(header.format == HEADER_FORMAT, "unsupported header format {}", header.format);
    let bin = with_ext(stem, "bin");
    let bytes = std::fs::read(&bin).with_context(|| format!("reading {}", bin.display()))?;
    ensure!(
        bytes.len() == header.bit_len.div_ceil(8),
        "{} holds {} bytes but the header declares {} bits",
        bin.display(),
        bytes.len(),
        header.bit_len
    );
    Ok((header, bytes))
}

mod hex_u64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:#018x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(D::Error::custom)
    }

    pub(super) fn parse(text: &str) -> Result<u64, String> {
        let digits = text
            .strip_prefix("0x")
            .ok_or_else(|| format!("expected a 0x-prefixed hex string, got {text:?}"))?;
        u64::from_str_radix(digits, 16).map_err(|e| format!("{text:?}: {e}"))
    }
}

mod hex_u64_opt {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::hex_u64::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| super::hex_u64::parse(&t).map_err(D::Error::custom))
            .transpose()
    }
}
