#pragma once

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdgan/log.hpp"
#include "cdgan/model.hpp"
#include "cdgan/rng.hpp"
#include "cdgan/serialize.hpp"

namespace cdgan {

/// Recipe for the deterministic multi-domain toy dataset.
struct SyntheticDomainSpec {
  int n_domains = 4;
  int images_per_domain = 200;
  int image_size = 32;
  uint64_t seed = 0;
  double train_fraction = 0.8;

  void validate() const {
    if (n_domains < 2 || n_domains > 8) {
      throw ConfigError("synthetic: n_domains must lie in [2, 8] (palette size)");
    }
    if (images_per_domain < 1) throw ConfigError("synthetic: images_per_domain must be positive");
    if (image_size < 8) throw ConfigError("synthetic: image_size must be at least 8");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
      throw ConfigError("synthetic: train_fraction must lie in (0, 1]");
    }
  }
};

inline void to_json(json& j, const SyntheticDomainSpec& s) {
  j = json{{"n_domains", s.n_domains},
           {"images_per_domain", s.images_per_domain},
           {"image_size", s.image_size},
           {"seed", s.seed},
           {"train_fraction", s.train_fraction}};
}

inline void from_json(const json& j, SyntheticDomainSpec& s) {
  s.n_domains = j.value("n_domains", s.n_domains);
  s.images_per_domain = j.value("images_per_domain", s.images_per_domain);
  s.image_size = j.value("image_size", s.image_size);
  s.seed = j.value("seed", s.seed);
  s.train_fraction = j.value("train_fraction", s.train_fraction);
}

/// Rendering rule of one synthetic domain: a dominant color tint plus a
/// stripe-texture frequency. All entries are pairwise distinct.
struct DomainSignature {
  std::array<Scalar, 3> tint;  // rgb in [-1, 1]
  int texture_freq;
};

/// Fixed palette; domain 0 is strongly red-dominant so channel statistics
/// separate the domains by construction.
inline DomainSignature domain_signature(int d) {
  static const DomainSignature palette[8] = {
      {{0.75, -0.55, -0.55}, 2},  {{-0.55, 0.75, -0.55}, 3}, {{-0.55, -0.55, 0.75}, 4},
      {{0.10, 0.55, 0.55}, 5},    {{-0.35, 0.10, 0.75}, 6},  {{0.05, 0.75, 0.10}, 7},
      {{-0.75, 0.05, 0.05}, 8},   {{0.15, -0.10, -0.75}, 9}};
  if (d < 0 || d >= 8) throw ValueError("synthetic: no signature for domain " + std::to_string(d));
  return palette[d];
}

/// Immutable folder- or synthesis-backed image collection, split into
/// disjoint train and test partitions per domain. Pixels live in [-1, 1],
/// channel order RGB.
struct MultiDomainDataset {
  std::vector<std::string> domains;
  std::vector<std::vector<Tensor>> train;  // [domain][image], each (1, C, S, S)
  std::vector<std::vector<Tensor>> test;
  int image_size = 0;
  int image_channels = 3;

  int n_domains() const { return static_cast<int>(domains.size()); }

  void check() const {
    if (domains.size() < 2) throw ValueError("dataset: needs at least 2 domains");
    if (train.size() != domains.size() || test.size() != domains.size()) {
      throw ValueError("dataset: partition lists do not match domain list");
    }
    for (size_t d = 0; d < domains.size(); ++d) {
      for (const auto* part : {&train[d], &test[d]}) {
        for (const Tensor& t : *part) {
          if (t.n() != 1 || t.c() != image_channels || t.h() != image_size || t.w() != image_size) {
            throw ShapeError("dataset: image of shape " + t.shape_str() + " in domain " + domains[d]);
          }
        }
      }
    }
  }
};

namespace detail {

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Distinct, spec-independent seed per (dataset seed, domain, image).
inline uint64_t mix_seed(uint64_t seed, uint64_t domain, uint64_t index) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (domain + 1) + 0xBF58476D1CE4E5B9ull * (index + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline Tensor tensor_from_mat(const cv::Mat& bgr, int image_size) {
  cv::Mat resized;
  cv::resize(bgr, resized, cv::Size(image_size, image_size), 0, 0, cv::INTER_LINEAR);
  Tensor t(1, 3, image_size, image_size);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const cv::Vec3b px = resized.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        t.at(0, c, y, x) = static_cast<Scalar>(px[2 - c]) / 127.5 - 1.0;  // BGR -> RGB
      }
    }
  }
  return t;
}

inline cv::Mat mat_from_tensor(const Tensor& t) {
  cv::Mat bgr(t.h(), t.w(), CV_8UC3);
  for (int y = 0; y < t.h(); ++y) {
    for (int x = 0; x < t.w(); ++x) {
      cv::Vec3b& px = bgr.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        const Scalar v = clamp((t.at(0, c, y, x) + 1.0) * 127.5, 0.0, 255.0);
        px[2 - c] = static_cast<unsigned char>(std::lround(v));
      }
    }
  }
  return bgr;
}

inline bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// One synthetic image: domain tint, stripe texture, then a few gray
/// shapes drawn from a content distribution shared by all domains.
inline Tensor render_synthetic_image(int image_size, const DomainSignature& sig, Rng& rng) {
  const int S = image_size;
  Tensor t(1, 3, S, S);
  const Scalar phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int y = 0; y < S; ++y) {
    const Scalar stripe = 0.12 * std::sin(2.0 * M_PI * sig.texture_freq * y / S + phase);
    for (int x = 0; x < S; ++x) {
      for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = sig.tint[static_cast<size_t>(c)] + stripe;
    }
  }
  const int n_shapes = 2 + static_cast<int>(rng.uniform_int(3));
  for (int s = 0; s < n_shapes; ++s) {
    const bool circle = rng.uniform() < 0.5;
    const Scalar gray = rng.uniform(-0.25, 0.25);
    const int cx = static_cast<int>(rng.uniform_int(S));
    const int cy = static_cast<int>(rng.uniform_int(S));
    const int r = S / 10 + static_cast<int>(rng.uniform_int(std::max(1, S / 4 - S / 10)));
    for (int y = std::max(0, cy - r); y < std::min(S, cy + r + 1); ++y) {
      for (int x = std::max(0, cx - r); x < std::min(S, cx + r + 1); ++x) {
        const bool inside =
            circle ? (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r : true;  // square otherwise
        if (inside) {
          for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = gray;
        }
      }
    }
  }
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = clamp(t[i], -1.0, 1.0);
  return t;
}

}  // namespace detail

/// Renders the toy dataset. Determinism: every image derives from its own
/// seed mixed from (spec.seed, domain, index), so the content of image i
/// does not depend on how many images precede it.
inline MultiDomainDataset make_synthetic(const SyntheticDomainSpec& spec) {
  spec.validate();
  MultiDomainDataset ds;
  ds.image_size = spec.image_size;
  ds.image_channels = 3;
  const int train_count =
      static_cast<int>(spec.train_fraction * spec.images_per_domain + 0.5);
  for (int d = 0; d < spec.n_domains; ++d) {
    ds.domains.push_back("domain_" + std::to_string(d));
    ds.train.emplace_back();
    ds.test.emplace_back();
    const DomainSignature sig = domain_signature(d);
    for (int i = 0; i < spec.images_per_domain; ++i) {
      Rng rng(detail::mix_seed(spec.seed, static_cast<uint64_t>(d), static_cast<uint64_t>(i)));
      Tensor img = detail::render_synthetic_image(spec.image_size, sig, rng);
      (i < train_count ? ds.train.back() : ds.test.back()).push_back(std::move(img));
    }
  }
  ds.check();
  return ds;
}

/// Loads a folder-per-domain dataset: decodes, bilinearly resizes, maps
/// pixels linearly to [-1, 1], and splits train/test by hashing sorted
/// filenames so partitions are stable across runs and platforms.
inline MultiDomainDataset load_dataset(const std::string& root, int image_size,
                                       double train_fraction = 0.8) {
  namespace fs = std::filesystem;
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("load_dataset: train_fraction must lie in (0, 1]");
  }
  if (image_size < 1) throw ConfigError("load_dataset: image_size must be positive");
  if (!fs::is_directory(root)) throw IoError("load_dataset: no such directory: " + root);

  std::vector<std::string> domain_names;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) domain_names.push_back(e.path().filename().string());
  }
  std::sort(domain_names.begin(), domain_names.end());
  if (domain_names.size() < 2) {
    throw IoError("load_dataset: " + root + " must contain at least 2 domain subdirectories");
  }

  MultiDomainDataset ds;
  ds.image_size = image_size;
  ds.image_channels = 3;
  for (const std::string& name : domain_names) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(root) / name)) {
      if (e.is_regular_file() && detail::has_image_extension(e.path())) {
        files.push_back(e.path().filename().string());
      }
    }
    std::sort(files.begin(), files.end());

    std::vector<std::pair<std::string, Tensor>> decoded;
    for (const std::string& f : files) {
      cv::Mat m = cv::imread((fs::path(root) / name / f).string(), cv::IMREAD_COLOR);
      if (m.empty()) {
        logging::info("load_dataset: skipping undecodable image " + name + "/" + f);
        continue;
      }
      decoded.emplace_back(f, detail::tensor_from_mat(m, image_size));
    }
    if (decoded.empty()) {
      throw IoError("load_dataset: domain " + name + " has no decodable images");
    }
    // order by filename hash, then take the leading fraction as train
    std::stable_sort(decoded.begin(), decoded.end(), [](const auto& a, const auto& b) {
      const uint64_t ha = detail::fnv1a64(a.first), hb = detail::fnv1a64(b.first);
      return ha != hb ? ha < hb : a.first < b.first;
    });
    const int train_count =
        static_cast<int>(train_fraction * static_cast<double>(decoded.size()) + 0.5);
    ds.domains.push_back(name);
    ds.train.emplace_back();
    ds.test.emplace_back();
    for (size_t i = 0; i < decoded.size(); ++i) {
      (static_cast<int>(i) < train_count ? ds.train.back() : ds.test.back())
          .push_back(std::move(decoded[i].second));
    }
  }
  ds.check();
  return ds;
}

/// Writes every image of every domain back out as PNGs under
/// root/<domain>/ (train first, then test; the split is re-derivable).
inline void export_dataset(const MultiDomainDataset& ds, const std::string& root) {
  namespace fs = std::filesystem;
  for (size_t d = 0; d < ds.domains.size(); ++d) {
    const fs::path dir = fs::path(root) / ds.domains[d];
    fs::create_directories(dir);
    int index = 0;
    for (const auto* part : {&ds.train[d], &ds.test[d]}) {
      for (const Tensor& t : *part) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.png", index++);
        if (!cv::imwrite((dir / name).string(), detail::mat_from_tensor(t))) {
          throw IoError("export_dataset: failed to write " + (dir / name).string());
        }
      }
    }
  }
}

struct Batch {
  Tensor images;  // (n, C, S, S)
  DomainLabel label;
};

/// Epoch-reshuffling per-domain sampler over the train split. The dataset
/// stays immutable; all cursor state lives here and round-trips through
/// JSON for exact training resume.
class BatchSampler {
 public:
  explicit BatchSampler(const MultiDomainDataset* ds) : ds_(ds) {
    perms_.resize(static_cast<size_t>(ds->n_domains()));
    cursors_.assign(static_cast<size_t>(ds->n_domains()), 0);
  }

  Batch sample_batch(int domain_id, int n, Rng& rng) {
    if (domain_id < 0 || domain_id >= ds_->n_domains()) {
      throw ValueError("sample_batch: unknown domain " + std::to_string(domain_id));
    }
    if (n < 1) throw ValueError("sample_batch: batch size must be positive");
    const auto& pool = ds_->train[static_cast<size_t>(domain_id)];
    if (pool.empty()) {
      throw ValueError("sample_batch: domain " + std::to_string(domain_id) + " has no training images");
    }
    Batch b;
    b.label = DomainLabel::make(domain_id, ds_->n_domains());
    b.images = Tensor(n, ds_->image_channels, ds_->image_size, ds_->image_size);
    auto& perm = perms_[static_cast<size_t>(domain_id)];
    auto& cur = cursors_[static_cast<size_t>(domain_id)];
    const int64_t stride = b.images.numel() / n;
    for (int i = 0; i < n; ++i) {
      if (cur >= static_cast<int>(perm.size())) {
        perm = rng.permutation(static_cast<int>(pool.size()));
        cur = 0;
      }
      const Tensor& src = pool[static_cast<size_t>(perm[static_cast<size_t>(cur++)])];
      std::copy(src.data(), src.data() + stride, b.images.data() + i * stride);
    }
    return b;
  }

  json state() const { return json{{"perms", perms_}, {"cursors", cursors_}}; }

  void restore(const json& j) {
    const auto perms = j.at("perms").get<std::vector<std::vector<int>>>();
    const auto cursors = j.at("cursors").get<std::vector<int>>();
    if (perms.size() != perms_.size() || cursors.size() != cursors_.size()) {
      throw IoError("sampler: restored state does not match dataset domains");
    }
    perms_ = perms;
    cursors_ = cursors;
  }

 private:
  const MultiDomainDataset* ds_;
  std::vector<std::vector<int>> perms_;
  std::vector<int> cursors_;
};

}  // namespace cdgan
