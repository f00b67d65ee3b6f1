#include "cyber0/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cyber0/seedstream.hpp"

namespace cyber0 {

namespace {

bool has_gz_suffix(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (has_gz_suffix(path)) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
    const int written = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (written != static_cast<int>(bytes.size())) {
      throw IdxError(IdxError::Kind::Io, "short write to " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IdxError(IdxError::Kind::Io, "short write to " + path.string());
}

}  // namespace

void Dataset::validate() const {
  if (x.size() != rows * features) throw std::invalid_argument("dataset: feature matrix shape mismatch");
  if (labels.size() != rows) throw std::invalid_argument("dataset: label count differs from row count");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(l) + " out of range");
    }
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  if (has_gz_suffix(path)) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
    std::uint8_t buf[1 << 16];
    for (;;) {
      const int n = gzread(f, buf, sizeof buf);
      if (n < 0) {
        gzclose(f);
        throw IdxError(IdxError::Kind::Truncated, "corrupt gzip stream in " + path.string());
      }
      if (n == 0) break;
      bytes.insert(bytes.end(), buf, buf + n);
    }
    gzclose(f);
    return bytes;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
  bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return bytes;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file_bytes(images);
  const auto lab = read_file_bytes(labels);

  if (img.size() < 4) throw IdxError(IdxError::Kind::Truncated, images.string() + ": header truncated");
  if (const auto magic = read_be32(img, 0); magic != kIdxImageMagic) {
    throw IdxError(IdxError::Kind::BadMagic, images.string() + ": bad image magic " + std::to_string(magic));
  }
  if (img.size() < 16) throw IdxError(IdxError::Kind::Truncated, images.string() + ": header truncated");
  if (lab.size() < 4) throw IdxError(IdxError::Kind::Truncated, labels.string() + ": header truncated");
  if (const auto magic = read_be32(lab, 0); magic != kIdxLabelMagic) {
    throw IdxError(IdxError::Kind::BadMagic, labels.string() + ": bad label magic " + std::to_string(magic));
  }
  if (lab.size() < 8) throw IdxError(IdxError::Kind::Truncated, labels.string() + ": header truncated");

  const std::size_t count = read_be32(img, 4);
  const std::size_t pixels = std::size_t{read_be32(img, 8)} * read_be32(img, 12);
  const std::size_t label_count = read_be32(lab, 4);
  if (count != label_count) {
    throw IdxError(IdxError::Kind::CountMismatch, "image count " + std::to_string(count) +
                                                      " differs from label count " + std::to_string(label_count));
  }
  if (img.size() < 16 + count * pixels) {
    throw IdxError(IdxError::Kind::Truncated, images.string() + ": pixel payload truncated");
  }
  if (lab.size() < 8 + count) {
    throw IdxError(IdxError::Kind::Truncated, labels.string() + ": label payload truncated");
  }

  Dataset out;
  out.rows = count;
  out.features = pixels;
  out.classes = 10;
  out.x.resize(count * pixels);
  out.labels.resize(count);
  for (std::size_t i = 0; i < count * pixels; ++i) out.x[i] = img[16 + i] / 255.0;
  for (std::size_t i = 0; i < count; ++i) out.labels[i] = lab[8 + i];
  out.validate();
  return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t image_rows,
               std::uint32_t image_cols) {
  if (std::size_t{image_rows} * image_cols != data.features) {
    throw std::invalid_argument("write_idx: image shape does not match feature count");
  }
  std::vector<std::uint8_t> img;
  img.reserve(16 + data.x.size());
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(data.rows));
  put_be32(img, image_rows);
  put_be32(img, image_cols);
  for (double v : data.x) img.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));

  std::vector<std::uint8_t> lab;
  lab.reserve(8 + data.rows);
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.rows));
  for (int l : data.labels) lab.push_back(static_cast<std::uint8_t>(l));

  write_bytes(images, img);
  write_bytes(labels, lab);
}

Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t p, std::size_t classes,
                       double spread) {
  if (n == 0 || p == 0 || classes == 0) throw std::invalid_argument("synth_generate: n, p, C must be >= 1");
  RngStream centre_rng(derive_seed({seed, 0, 0, 0, StreamKind::Init}));
  std::vector<double> centroids(classes * p);
  for (double& c : centroids) c = 0.2 + 0.6 * centre_rng.next_unit();

  RngStream label_rng(derive_seed({seed, 1, 0, 0, StreamKind::Init}));
  GaussianStream noise(derive_seed({seed, 2, 0, 0, StreamKind::Init}));

  Dataset out;
  out.rows = n;
  out.features = p;
  out.classes = classes;
  out.x.resize(n * p);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::size_t>(label_rng.below(classes));
    out.labels[i] = static_cast<int>(label);
    for (std::size_t j = 0; j < p; ++j) {
      out.x[i * p + j] = std::clamp(centroids[label * p + j] + spread * noise.next(), 0.0, 1.0);
    }
  }
  return out;
}

Partition partition_iid(const Dataset& data, std::size_t clients, std::uint64_t seed) {
  if (clients == 0) throw std::invalid_argument("partition_iid: need at least one client");
  if (clients > data.rows) {
    throw std::invalid_argument("partition_iid: " + std::to_string(clients) + " clients exceed " +
                                std::to_string(data.rows) + " rows");
  }
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Epoch tags -1/-2 keep partition streams apart from batch streams.
  RngStream rng(derive_seed({seed, 0, 0, -1, StreamKind::DataShuffle}));
  shuffle(order, rng);

  Partition part;
  part.shards.resize(clients);
  for (std::size_t i = 0; i < order.size(); ++i) part.shards[i % clients].push_back(order[i]);
  return part;
}

std::vector<std::vector<int>> noniid_label_owners(std::size_t clients, std::size_t classes) {
  std::vector<std::vector<int>> owned(clients);
  for (std::size_t l = 0; l < classes; ++l) {
    for (std::size_t i = 0; i < clients; ++i) {
      if (l % clients == i % classes) owned[i].push_back(static_cast<int>(l));
    }
  }
  return owned;
}

Partition partition_noniid(const Dataset& data, std::size_t clients, std::uint64_t seed) {
  if (clients == 0) throw std::invalid_argument("partition_noniid: need at least one client");
  if (data.classes == 0) throw std::invalid_argument("partition_noniid: dataset has no classes");

  std::vector<std::vector<std::size_t>> by_label(data.classes);
  for (std::size_t i = 0; i < data.rows; ++i) by_label[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Partition part;
  part.shards.resize(clients);
  for (std::size_t l = 0; l < data.classes; ++l) {
    std::vector<std::size_t> owners;
    for (std::size_t i = 0; i < clients; ++i) {
      if (l % clients == i % data.classes) owners.push_back(i);
    }
    auto& rows = by_label[l];
    RngStream rng(derive_seed({seed, 0, static_cast<std::int64_t>(l), -2, StreamKind::DataShuffle}));
    shuffle(rows, rng);
    const std::size_t base = rows.size() / owners.size();
    const std::size_t extra = rows.size() % owners.size();
    std::size_t pos = 0;
    for (std::size_t j = 0; j < owners.size(); ++j) {
      const std::size_t take = base + (j < extra ? 1 : 0);
      auto& shard = part.shards[owners[j]];
      shard.insert(shard.end(), rows.begin() + static_cast<std::ptrdiff_t>(pos),
                   rows.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
  }
  return part;
}

std::vector<std::size_t> sample_batch_rows(std::span<const std::size_t> shard, std::size_t size,
                                           std::uint64_t index, std::uint64_t data_seed,
                                           std::uint64_t client) {
  const std::size_t n = shard.size();
  if (n == 0) throw std::invalid_argument("sample_batch_rows: empty shard");
  size = std::min(size, n);
  std::vector<std::size_t> out;
  out.reserve(size);

  std::uint64_t pos = index * size;
  std::uint64_t cached_pass = ~std::uint64_t{0};
  std::vector<std::size_t> perm;
  for (std::size_t b = 0; b < size; ++b, ++pos) {
    const std::uint64_t pass = pos / n;
    if (pass != cached_pass) {
      perm.assign(shard.begin(), shard.end());
      RngStream rng(derive_seed({data_seed, static_cast<std::int64_t>(pass),
                                 static_cast<std::int64_t>(client), 0, StreamKind::DataShuffle}));
      shuffle(perm, rng);
      cached_pass = pass;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

Batch make_batch(const Dataset& data, std::vector<std::size_t> rows) {
  Batch b;
  b.data = &data;
  b.labels.reserve(rows.size());
  for (std::size_t r : rows) b.labels.push_back(data.labels[r]);
  b.rows = std::move(rows);
  return b;
}

}  // namespace cyber0
