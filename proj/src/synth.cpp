#include "treegeo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "treegeo/formats.hpp"
#include "treegeo/io.hpp"
#include "treegeo/spatial_grid.hpp"

namespace treegeo {

std::string_view to_string(InjectedFailure f) noexcept {
  switch (f) {
    case InjectedFailure::None:
      return "none";
    case InjectedFailure::FailedGeocode:
      return "failed_geocode";
    case InjectedFailure::OutlierGeocode:
      return "outlier_geocode";
    case InjectedFailure::WrongGeocode:
      return "wrong_geocode";
    case InjectedFailure::UncoveredBlock:
      return "uncovered_block";
  }
  return "none";
}

void validate(const SynthConfig& c) {
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw InputError(fmt::format("synthetic config: {}", what));
  };
  require(c.n_streets > 0, "n_streets must be positive");
  require(c.blocks_per_street > 0, "blocks_per_street must be positive");
  require(c.address_spacing_m > 0.0, "address_spacing_m must be positive");
  require(c.camera_spacing_m > 0.0, "camera_spacing_m must be positive");
  require(c.block_length_m >= c.address_spacing_m, "block_length_m must hold at least one parcel");
  require(c.block_gap_m >= 0.0 && c.street_spacing_m > 0.0, "spacings must be positive");
  require(c.parcel_depth_m > 0.0 && c.street_half_width_m > 0.0, "parcel geometry must be positive");
  require(c.tree_setback_min_m > 0.0 && c.tree_setback_min_m <= c.tree_setback_max_m &&
              c.tree_setback_max_m < c.parcel_depth_m,
          "tree setbacks must satisfy 0 < min <= max < parcel_depth_m");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(c.miss_rate) && prob(c.false_positive_rate) && prob(c.non_rooftop_fraction) &&
              prob(c.unit_suffix_rate),
          "probabilities must lie in [0, 1]");
  double total = 0.0;
  for (double p : c.trees_per_address) {
    require(p >= 0.0, "trees_per_address weights must be non-negative");
    total += p;
  }
  require(total > 0.0, "trees_per_address weights must not all be zero");
  require(c.detection_noise_sigma_m >= 0.0, "detection_noise_sigma_m must be non-negative");
  require(c.score_min >= 0.0 && c.score_min <= c.score_max && c.score_max <= 1.0, "scores must satisfy 0<=min<=max<=1");
  require(c.failed_geocodes >= 0 && c.outlier_geocodes >= 0 && c.wrong_geocodes >= 0 && c.uncovered_blocks >= 0,
          "injection counts must be non-negative");
  require(c.uncovered_blocks <= c.n_streets * c.blocks_per_street, "more uncovered blocks than blocks");
  require(c.pano_width_px >= 2 && c.pano_width_px % 2 == 0, "pano_width_px must be even");
  require(c.camera_height_m > 0.0, "camera_height_m must be positive");
}

namespace {

// Portable random stream: mt19937_64 bits only, no std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    return r * std::cos(2.0 * kPi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

constexpr std::array<std::string_view, 12> kStreetNames{"OAK",    "ELM",    "MAPLE",   "CEDAR",  "PINE",  "WALNUT",
                                                         "BIRCH",  "ALDER",  "SYCAMORE", "LAUREL", "WILLOW", "POPLAR"};
constexpr std::array<std::string_view, 9> kSuffixAbbrev{"St", "Ave", "Blvd", "Dr", "Rd", "Ln", "Ct", "Pl", "Way"};
constexpr std::array<std::string_view, 6> kSpecies{"Platanus acerifolia", "Quercus agrifolia", "Pyrus calleryana",
                                                   "Lagerstroemia indica", "Magnolia grandiflora", "Ulmus parvifolia"};

int draw_tree_count(Rng& rng, const std::array<double, 4>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (int k = 0; k < 4; ++k) {
    if (u < weights[static_cast<std::size_t>(k)]) return k;
    u -= weights[static_cast<std::size_t>(k)];
  }
  return 3;
}

struct BlockRef {
  int street;
  int block;
};

}  // namespace

std::array<std::size_t, 5> SynthScene::injected_trees() const {
  std::array<std::size_t, 5> out{};
  for (const auto& a : addresses) out[static_cast<std::size_t>(a.injected)] += a.trees.size();
  return out;
}

std::vector<GeocodedAddress> SynthScene::geocoded() const {
  std::vector<GeocodedAddress> out;
  out.reserve(addresses.size());
  for (const auto& a : addresses) {
    out.push_back({a.address, a.geocode.point, a.geocode.accuracy, static_cast<int>(a.trees.size()), false});
  }
  return out;
}

SynthScene generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const LocalFrame frame(cfg.origin);
  auto geo = [&](double x, double y) { return frame.to_geo({x, y}); };

  const int parcels_per_side = static_cast<int>(std::floor(cfg.block_length_m / cfg.address_spacing_m + 1e-9));
  const int number_base = 100 * std::max(1, static_cast<int>(std::ceil((2.0 * parcels_per_side + 2.0) / 100.0)));
  auto block_x0 = [&](int b) { return b * (cfg.block_length_m + cfg.block_gap_m); };
  auto street_y = [&](int s) { return s * cfg.street_spacing_m; };

  // Which blocks lose panorama coverage.
  std::vector<BlockRef> blocks;
  for (int s = 0; s < cfg.n_streets; ++s) {
    for (int b = 0; b < cfg.blocks_per_street; ++b) blocks.push_back({s, b});
  }
  std::vector<BlockRef> shuffled = blocks;
  rng.shuffle(shuffled);
  std::vector<char> uncovered(blocks.size(), 0);
  for (int i = 0; i < cfg.uncovered_blocks; ++i) {
    const auto& br = shuffled[static_cast<std::size_t>(i)];
    uncovered[static_cast<std::size_t>(br.street * cfg.blocks_per_street + br.block)] = 1;
  }
  auto is_uncovered = [&](int s, int b) {
    return uncovered[static_cast<std::size_t>(s * cfg.blocks_per_street + b)] != 0;
  };

  SynthScene scene;

  // Parcels, addresses and inventory trees.
  for (int s = 0; s < cfg.n_streets; ++s) {
    const std::string name(kStreetNames[static_cast<std::size_t>(s) % kStreetNames.size()]);
    const std::string suffix(kSuffixAbbrev[static_cast<std::size_t>(s) % kSuffixAbbrev.size()]);
    const std::string display_name =
        s < static_cast<int>(kStreetNames.size()) ? name : fmt::format("{} {}", name, s / kStreetNames.size() + 1);
    for (int b = 0; b < cfg.blocks_per_street; ++b) {
      for (int side : {1, -1}) {
        for (int p = 0; p < parcels_per_side; ++p) {
          const int k = draw_tree_count(rng, cfg.trees_per_address);
          const double cx = block_x0(b) + (p + 0.5) * cfg.address_spacing_m;
          const double cy = street_y(s) + side * (cfg.street_half_width_m + 0.5 * cfg.parcel_depth_m);
          const int house = (b + 1) * number_base + 2 * p + (side < 0 ? 1 : 0);
          const std::string raw_base = fmt::format("{} {} {}", house, display_name, suffix);

          // Non-rooftop draws happen for every parcel to keep the stream
          // layout independent of tree counts.
          const bool non_rooftop = rng.bernoulli(cfg.non_rooftop_fraction);
          const bool approximate = rng.uniform() < 5.0 / 32.0;
          if (k == 0) continue;

          SynthAddress addr;
          addr.address = normalize_address(raw_base);
          addr.parcel_center = geo(cx, cy);
          addr.street = s;
          addr.block = b;
          if (non_rooftop) {
            addr.geocode = {geo(cx, cy - side * cfg.geocode_offset_m),
                            approximate ? Accuracy::Approximate : Accuracy::Interpolated};
          } else {
            addr.geocode = {addr.parcel_center, Accuracy::Rooftop};
          }
          if (is_uncovered(s, b)) addr.injected = InjectedFailure::UncoveredBlock;

          for (int j = 0; j < k; ++j) {
            const double slot = (j + 0.5) / k * cfg.address_spacing_m - 0.5 * cfg.address_spacing_m;
            const double x = cx + slot * (k > 1 ? 1.0 : 0.0) + rng.uniform(-cfg.tree_jitter_m, cfg.tree_jitter_m);
            const double setback = rng.uniform(cfg.tree_setback_min_m, cfg.tree_setback_max_m);
            const double y = street_y(s) + side * (cfg.street_half_width_m + setback);

            InventoryTree tree;
            tree.tree_id = fmt::format("T{:06}", scene.inventory.size() + 1);
            tree.address = addr.address;
            tree.species = std::string(kSpecies[rng.index(kSpecies.size())]);
            tree.ground_truth = geo(x, y);
            std::string raw = raw_base;
            if (rng.bernoulli(cfg.unit_suffix_rate)) {
              raw += rng.uniform() < 0.5 ? fmt::format(" Apt {}", j + 1) : fmt::format(" #{}", j + 1);
            }
            addr.trees.push_back(scene.inventory.size());
            scene.inventory.push_back(std::move(tree));
            scene.raw_addresses.push_back(std::move(raw));
          }
          scene.addresses.push_back(std::move(addr));
        }
      }
    }
  }

  // Geocode failures, drawn from addresses in covered blocks.
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < scene.addresses.size(); ++i) {
    if (scene.addresses[i].injected == InjectedFailure::None) eligible.push_back(i);
  }
  const std::size_t wanted = static_cast<std::size_t>(cfg.failed_geocodes + cfg.outlier_geocodes + cfg.wrong_geocodes);
  if (wanted > eligible.size()) {
    throw InputError(
        fmt::format("synthetic config: {} geocode failures requested but only {} eligible addresses", wanted,
                    eligible.size()));
  }
  rng.shuffle(eligible);
  std::size_t cursor = 0;
  for (int i = 0; i < cfg.failed_geocodes; ++i) {
    auto& a = scene.addresses[eligible[cursor++]];
    a.injected = InjectedFailure::FailedGeocode;
    a.geocode = GeocodeResponse::failed();
  }
  for (int i = 0; i < cfg.outlier_geocodes; ++i) {
    auto& a = scene.addresses[eligible[cursor++]];
    a.injected = InjectedFailure::OutlierGeocode;
    a.geocode.point = offset(a.parcel_center, rng.uniform(0.0, 360.0), cfg.outlier_offset_m);
  }
  for (int i = 0; i < cfg.wrong_geocodes; ++i) {
    auto& a = scene.addresses[eligible[cursor++]];
    a.injected = InjectedFailure::WrongGeocode;
    a.geocode.point = offset(a.parcel_center, rng.uniform() < 0.5 ? 90.0 : 270.0, cfg.wrong_geocode_offset_m);
  }

  // Panoramas along the centerline of covered blocks.
  const int pano_height = cfg.pano_width_px / 2;
  for (int s = 0; s < cfg.n_streets; ++s) {
    for (int b = 0; b < cfg.blocks_per_street; ++b) {
      if (is_uncovered(s, b)) continue;
      const int n_cams = static_cast<int>(std::floor(cfg.block_length_m / cfg.camera_spacing_m + 1e-9)) + 1;
      for (int c = 0; c < n_cams; ++c) {
        PanoramaMeta pano;
        pano.pano_id = fmt::format("S{:02}B{:02}C{:03}", s, b, c);
        pano.camera = geo(block_x0(b) + c * cfg.camera_spacing_m, street_y(s));
        pano.heading = std::floor(rng.uniform(0.0, 360.0) * 1e6) / 1e6;
        pano.width_px = cfg.pano_width_px;
        pano.height_px = pano_height;
        pano.camera_height_m = cfg.camera_height_m;
        scene.panoramas.push_back(std::move(pano));
      }
    }
  }

  // Detections of true trees, then false positives.
  SpatialGrid grid(frame, cfg.max_detection_distance_m);
  for (std::size_t i = 0; i < scene.inventory.size(); ++i) grid.insert(*scene.inventory[i].ground_truth, i);
  std::vector<std::size_t> seen;
  for (const auto& pano : scene.panoramas) {
    seen.clear();
    grid.for_each_near(pano.camera, 2, [&](std::size_t i) { seen.push_back(i); });
    std::sort(seen.begin(), seen.end());
    for (std::size_t i : seen) {
      const GeoPoint truth = *scene.inventory[i].ground_truth;
      const double d = local_distance_m(pano.camera, truth);
      if (d < 0.5 || d > cfg.max_detection_distance_m) continue;
      if (rng.bernoulli(cfg.miss_rate)) continue;
      GeoPoint observed = truth;
      if (cfg.detection_noise_sigma_m > 0.0) {
        const double ex = rng.normal() * cfg.detection_noise_sigma_m;
        const double ny = rng.normal() * cfg.detection_noise_sigma_m;
        observed = offset(truth, std::atan2(ex, ny) * kRadToDeg, std::hypot(ex, ny));
      }
      const double od = local_distance_m(pano.camera, observed);
      const double score = rng.uniform(cfg.score_min, cfg.score_max);
      if (od < 0.5 || od > cfg.max_detection_distance_m) continue;
      scene.detections.push_back(synthesize_detection(pano, observed, score));
    }
    if (rng.bernoulli(cfg.false_positive_rate)) {
      const double r = std::max(0.5, cfg.false_positive_radius_m * std::sqrt(rng.uniform()));
      const GeoPoint fp = offset(pano.camera, rng.uniform(0.0, 360.0), r);
      scene.detections.push_back(synthesize_detection(pano, fp, rng.uniform(cfg.score_min, cfg.score_max)));
      ++scene.false_positives;
    }
  }

  // Ambiguity flags against every usable geocode.
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < scene.addresses.size(); ++i) {
    const auto& a = scene.addresses[i];
    if (a.injected != InjectedFailure::FailedGeocode && a.injected != InjectedFailure::OutlierGeocode) usable.push_back(i);
  }
  SpatialGrid geocode_grid(frame, 25.0);
  for (std::size_t i : usable) geocode_grid.insert(*scene.addresses[i].geocode.point, i);
  for (std::size_t i : usable) {
    auto& a = scene.addresses[i];
    bool unambiguous = true;
    for (std::size_t t : a.trees) {
      const GeoPoint truth = *scene.inventory[t].ground_truth;
      const double own = local_distance_m(truth, *a.geocode.point);
      const int ring = static_cast<int>(std::ceil(own / 25.0)) + 2;
      geocode_grid.for_each_near(truth, ring, [&](std::size_t j) {
        if (j != i && local_distance_m(truth, *scene.addresses[j].geocode.point) <= own) unambiguous = false;
      });
    }
    a.unambiguous = unambiguous;
  }
  return scene;
}

void write_scene(const SynthScene& scene, const std::filesystem::path& dir) {
  std::string inventory = "tree_id,address,species\n";
  for (std::size_t i = 0; i < scene.inventory.size(); ++i) {
    const auto& t = scene.inventory[i];
    inventory += fmt::format("{},{},{}\n", t.tree_id, scene.raw_addresses[i], t.species.value_or(""));
  }
  io::write_atomic(dir / "inventory.csv", inventory);

  GeocodeCache table;
  for (const auto& a : scene.addresses) table.store(a.address, a.geocode);
  io::write_atomic(dir / "geocoder.tsv", table.serialize());

  io::write_atomic(dir / "panoramas.tsv", formats::write_panoramas(scene.panoramas));
  io::write_atomic(dir / "detections.tsv", formats::write_detections(scene.detections));
  io::write_atomic(dir / "ground_truth.tsv", formats::write_ground_truth(scene.inventory));

  std::string injected = "tree_id\taddress\tinjected\tunambiguous\n";
  for (const auto& a : scene.addresses) {
    for (std::size_t t : a.trees) {
      injected += fmt::format("{}\t{}\t{}\t{}\n", scene.inventory[t].tree_id, a.address, to_string(a.injected),
                              a.unambiguous ? 1 : 0);
    }
  }
  io::write_atomic(dir / "injected.tsv", injected);

  io::write_atomic(dir / "scene.conf",
                   "# generated synthetic municipality\n"
                   "municipality = synthetic\n"
                   "inventory = inventory.csv\n"
                   "id_column = tree_id\n"
                   "address_column = address\n"
                   "species_column = species\n"
                   "geocoder = geocoder.tsv\n"
                   "panoramas = panoramas.tsv\n"
                   "detections = detections.tsv\n"
                   "ground_truth = ground_truth.tsv\n"
                   "output_dir = run\n");
}

}  // namespace treegeo
