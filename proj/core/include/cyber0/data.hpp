#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cyber0 {

/// Feature matrix (row-major, values in [0, 1]) with integer class labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::size_t classes = 0;
  std::vector<double> x;
  std::vector<int> labels;

  std::span<const double> row(std::size_t i) const { return {x.data() + i * features, features}; }

  /// Throws std::invalid_argument if shapes disagree or values are out of range.
  void validate() const;
};

/// Per-client row indices into a shared dataset.
struct Partition {
  std::vector<std::vector<std::size_t>> shards;

  std::size_t clients() const noexcept { return shards.size(); }
};

/// Rows and (possibly poisoned) labels a loss is evaluated on.
struct Batch {
  const Dataset* data = nullptr;
  std::vector<std::size_t> rows;
  std::vector<int> labels;

  std::size_t size() const noexcept { return rows.size(); }
};

class IdxError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Truncated, CountMismatch };
  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Loads an IDX image/label pair (files ending in .gz are inflated on the fly).
/// Pixels are scaled by 1/255; labels are taken as classes 0..9.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes features back as unsigned bytes (round(x * 255)) with the given image shape.
void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t image_rows,
               std::uint32_t image_cols);

/// Reads a whole file, inflating gzip when the name ends in ".gz".
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Class-conditional Gaussians around seeded centroids, clipped to [0, 1].
Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t p, std::size_t classes,
                       double spread = 0.15);

/// Seeded shuffle dealt round-robin; sizes differ by at most one, remainder to low ids.
Partition partition_iid(const Dataset& data, std::size_t clients, std::uint64_t seed);

/// Label ownership: client i owns label l iff l mod m == i mod C. Rows of each
/// label are shuffled and split evenly among its owners.
Partition partition_noniid(const Dataset& data, std::size_t clients, std::uint64_t seed);

/// Labels owned by each client under partition_noniid.
std::vector<std::vector<int>> noniid_label_owners(std::size_t clients, std::size_t classes);

/// Stateless minibatch schedule: the shard is consumed through a sequence of
/// seeded permutations, one per pass, and batch `index` covers positions
/// [index * size, (index + 1) * size) of that sequence.
std::vector<std::size_t> sample_batch_rows(std::span<const std::size_t> shard, std::size_t size,
                                           std::uint64_t index, std::uint64_t data_seed,
                                           std::uint64_t client);

Batch make_batch(const Dataset& data, std::vector<std::size_t> rows);

}  // namespace cyber0
