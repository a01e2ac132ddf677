#include "flowtraj/flow_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "flowtraj/simd/kernels.hpp"

namespace flowtraj {

static_assert(std::endian::native == std::endian::little,
              "flow container I/O assumes a little-endian host");

FlowMap::FlowMap(int width, int height)
    : FlowMap(width, height,
              std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0)),
              std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0))) {}

FlowMap::FlowMap(int width, int height, std::vector<float> u, std::vector<float> v)
    : width_(width), height_(height), u_(std::move(u)), v_(std::move(v)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "flow map dimensions must be positive");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (u_.size() != n || v_.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "component size does not match width*height");
  }
}

Vec2 FlowMap::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = std::min(static_cast<int>(x), width_ - 1);
  const int y0 = std::min(static_cast<int>(y), height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0, fy = y - y0;
  const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
  return {w00 * u(x0, y0) + w10 * u(x1, y0) + w01 * u(x0, y1) + w11 * u(x1, y1),
          w00 * v(x0, y0) + w10 * v(x1, y0) + w01 * v(x0, y1) + w11 * v(x1, y1)};
}

namespace {

template <class T>
T load_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

template <class T>
void store_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace

FlowMap parse_flo(std::span<const std::uint8_t> bytes, NonFinitePolicy policy) {
  constexpr std::size_t kHeader = 12;
  if (bytes.size() < 4) throw Error(ErrorCode::Truncated, "missing sentinel");
  if (std::bit_cast<std::uint32_t>(load_le<float>(bytes.data())) !=
      std::bit_cast<std::uint32_t>(kFloSentinel)) {
    throw Error(ErrorCode::BadMagic, "sentinel is not 202021.25");
  }
  if (bytes.size() < kHeader) throw Error(ErrorCode::Truncated, "missing width/height");
  const auto width = load_le<std::int32_t>(bytes.data() + 4);
  const auto height = load_le<std::int32_t>(bytes.data() + 8);
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "non-positive dimensions in header");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if ((bytes.size() - kHeader) / 8 < n) {
    throw Error(ErrorCode::Truncated, "payload shorter than header implies");
  }
  std::vector<float> u(n), v(n);
  const std::uint8_t* p = bytes.data() + kHeader;
  for (std::size_t i = 0; i < n; ++i, p += 8) {
    float a = load_le<float>(p);
    float b = load_le<float>(p + 4);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      if (policy == NonFinitePolicy::Reject) {
        throw Error(ErrorCode::NonFinite, "non-finite value at pixel " + std::to_string(i));
      }
      if (!std::isfinite(a)) a = 0.0f;
      if (!std::isfinite(b)) b = 0.0f;
    }
    u[i] = a;
    v[i] = b;
  }
  return FlowMap(width, height, std::move(u), std::move(v));
}

std::vector<std::uint8_t> write_flo(const FlowMap& map) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + map.size() * 8);
  store_le(out, kFloSentinel);
  store_le(out, static_cast<std::int32_t>(map.width()));
  store_le(out, static_cast<std::int32_t>(map.height()));
  const auto u = map.u_data();
  const auto v = map.v_data();
  for (std::size_t i = 0; i < map.size(); ++i) {
    store_le(out, u[i]);
    store_le(out, v[i]);
  }
  return out;
}

FlowMap read_flo_file(const std::filesystem::path& path, NonFinitePolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_flo(bytes, policy);
}

void write_flo_file(const std::filesystem::path& path, const FlowMap& map) {
  const auto bytes = write_flo(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::pair<int, int> two_lane_band(double gap, int height) {
  const double lo = 0.5 * (height - gap);
  const double hi = 0.5 * (height + gap);
  return {static_cast<int>(std::ceil(lo)), static_cast<int>(std::ceil(hi))};
}

FlowMap synth_field(const FieldKind& kind, int width, int height) {
  FlowMap map(width, height);
  const auto [band_lo, band_hi] =
      std::holds_alternative<field::TwoLane>(kind)
          ? two_lane_band(std::get<field::TwoLane>(kind).gap, height)
          : std::pair<int, int>{0, 0};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Vec2 f = std::visit(
          [&](const auto& k) -> Vec2 {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, field::Uniform>) {
              return {k.a, k.b};
            } else if constexpr (std::is_same_v<K, field::Vortex>) {
              return {-k.omega * (y - k.cy), k.omega * (x - k.cx)};
            } else if constexpr (std::is_same_v<K, field::Saddle>) {
              return {x - k.cx, -(y - k.cy)};
            } else {
              if (y < band_lo) return {k.speed, 0.0};
              if (y >= band_hi) return {-k.speed, 0.0};
              return {0.0, 0.0};
            }
          },
          kind);
      map.set(x, y, static_cast<float>(f.x), static_cast<float>(f.y));
    }
  }
  return map;
}

FlowMap average_flow(std::span<const FlowMap> maps) {
  if (maps.empty()) throw Error(ErrorCode::EmptyInput, "average_flow needs at least one map");
  const int w = maps.front().width(), h = maps.front().height();
  for (const auto& m : maps) {
    if (m.width() != w || m.height() != h) {
      throw Error(ErrorCode::DimensionMismatch, "maps differ in size");
    }
  }
  const auto& k = simd::active();
  std::vector<double> su(maps.front().size(), 0.0), sv(maps.front().size(), 0.0);
  for (const auto& m : maps) {
    k.accumulate(m.u_data(), su);
    k.accumulate(m.v_data(), sv);
  }
  FlowMap out(w, h);
  const double inv = 1.0 / static_cast<double>(maps.size());
  k.scale_store(su, inv, out.u_data());
  k.scale_store(sv, inv, out.v_data());
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::BadMagic, "expected binary PGM (P5)");
  auto next_int = [&]() {
    int value = 0;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    if (!(in >> value)) throw Error(ErrorCode::Truncated, "bad PGM header");
    return value;
  };
  GrayImage img;
  img.width = next_int();
  img.height = next_int();
  const int maxval = next_int();
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::InvalidArgument, "unsupported PGM header");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw Error(ErrorCode::Truncated, "PGM payload too short");
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace flowtraj
