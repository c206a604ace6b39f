// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tadvit/checkpoint.hpp"
#include "tadvit/config_text.hpp"
#include "tadvit/random.hpp"

namespace tadvit {
namespace {

struct Rgb {
  float r = 0, g = 0, b = 0;
};

Rgb mix(const Rgb& a, const Rgb& b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb scaled(const Rgb& c, float s) { return {c.r * s, c.g * s, c.b * s}; }

Rgb hsv(float h, float s, float v) {
  h = h - std::floor(h);
  const float c = v * s;
  const float x = c * (1 - std::abs(std::fmod(h * 6.0f, 2.0f) - 1));
  const float m = v - c;
  Rgb out;
  switch (static_cast<int>(h * 6.0f) % 6) {
    case 0: out = {c, x, 0}; break;
    case 1: out = {x, c, 0}; break;
    case 2: out = {0, c, x}; break;
    case 3: out = {0, x, c}; break;
    case 4: out = {x, 0, c}; break;
    default: out = {c, 0, x}; break;
  }
  return {out.r + m, out.g + m, out.b + m};
}

using rnd::splitmix64;

/// Lattice hash in [0, 1).
float hash01(std::int64_t a, std::int64_t b, std::uint64_t salt) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(a) * 0x100000001b3ULL ^
                                     splitmix64(static_cast<std::uint64_t>(b) ^ salt));
  return static_cast<float>(h >> 40) / static_cast<float>(1ULL << 24);
}

float value_noise(float x, float y, std::uint64_t salt) {
  const float fx = std::floor(x), fy = std::floor(y);
  const float tx = x - fx, ty = y - fy;
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  const float a = hash01(ix, iy, salt), b = hash01(ix + 1, iy, salt);
  const float c = hash01(ix, iy + 1, salt), d = hash01(ix + 1, iy + 1, salt);
  const float sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  return (a + (b - a) * sx) * (1 - sy) + (c + (d - c) * sx) * sy;
}

class Frame {
 public:
  Frame(VideoClip& clip, int t) : clip_(clip), t_(t) {}
  int width() const { return clip_.width; }
  int height() const { return clip_.height; }
  void put(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= clip_.width || y >= clip_.height) return;
    const float v[3] = {c.r, c.g, c.b};
    for (int ch = 0; ch < clip_.channels; ++ch) {
      const float q = std::clamp(v[ch % 3], 0.0f, 1.0f) * 255.0f;
      clip_.at(t_, y, x, ch) = static_cast<std::uint8_t>(std::lround(q));
    }
  }
  void rect(float x0, float y0, float x1, float y1, const Rgb& c) {
    const int ix0 = static_cast<int>(std::floor(std::max(x0, 0.0f)));
    const int iy0 = static_cast<int>(std::floor(std::max(y0, 0.0f)));
    const int ix1 = static_cast<int>(std::ceil(std::min(x1, static_cast<float>(clip_.width))));
    const int iy1 = static_cast<int>(std::ceil(std::min(y1, static_cast<float>(clip_.height))));
    for (int y = iy0; y < iy1; ++y)
      for (int x = ix0; x < ix1; ++x) put(x, y, c);
  }

 private:
  VideoClip& clip_;
  int t_;
};

// ---- driving -----------------------------------------------------------------

struct Vehicle {
  float lateral = 0;  // world units, lane centres at -1, 0, 1
  float depth = 8;    // distance ahead of the camera
  float speed = 0;    // depth change per frame
  Rgb color;
};

constexpr float kLaneHalfWidth = 0.5f;
constexpr float kRoadHalfWidth = 1.5f;
constexpr float kCameraHeight = 1.0f;
constexpr float kMinDepth = 1.6f;
constexpr float kMaxDepth = 26.0f;

void render_driving(const SceneSpec& spec, LabeledClip& out) {
  rnd::Engine rng(splitmix64(spec.seed ^ 0xd1ceULL));
  auto u = [](rnd::Engine& r) { return rnd::uniform01f(r); };
  const float w = static_cast<float>(spec.width), h = static_cast<float>(spec.height);
  const float focal = 0.9f * w;
  const float cx = 0.5f * w + (u(rng) - 0.5f) * 0.06f * w;
  float horizon = h * (0.36f + 0.08f * u(rng));
  const Rgb sky_top{0.35f + 0.1f * u(rng), 0.5f + 0.1f * u(rng), 0.8f + 0.15f * u(rng)};
  const Rgb sky_low = mix(sky_top, Rgb{0.85f, 0.85f, 0.88f}, 0.6f);
  const Rgb grass{0.22f + 0.1f * u(rng), 0.4f + 0.12f * u(rng), 0.16f + 0.06f * u(rng)};
  const float asphalt = 0.3f + 0.12f * u(rng);
  const std::uint64_t salt = splitmix64(spec.seed);
  const float sway_phase = 6.28f * u(rng);

  std::vector<Vehicle> cars;
  const std::array<float, 3> lanes{-1.0f, 0.0f, 1.0f};
  for (int i = 0; i < spec.agent_count; ++i) {
    Vehicle v;
    v.lateral = lanes[static_cast<std::size_t>(i == 0 ? 1 : rng() % 3)];
    v.depth = 4.0f + 16.0f * u(rng);
    v.speed = (u(rng) - 0.5f) * 0.16f;
    v.color = hsv(u(rng), 0.2f + 0.5f * u(rng), 0.35f + 0.5f * u(rng));
    cars.push_back(v);
  }
  // Anomalies act on a designated vehicle: the lead car in the ego lane, or
  // a car in a neighbouring lane for collision courses.
  if (spec.anomaly == AnomalyType::kSuddenStop && !cars.empty()) {
    cars[0].lateral = 0.0f;
    cars[0].depth = 7.0f + 4.0f * u(rng);
  }
  const float cut_side = u(rng) < 0.5f ? -1.0f : 1.0f;
  if (spec.anomaly == AnomalyType::kCollisionCourse) {
    if (cars.size() < 2) cars.push_back(cars.empty() ? Vehicle{} : cars.back());
    cars[1].lateral = cut_side;
    cars[1].depth = 8.0f + 4.0f * u(rng);
    cars[1].speed = 0.0f;
    cars[1].color = hsv(u(rng), 0.5f, 0.7f);
  }

  float travelled = 10.0f * u(rng);
  float speed = static_cast<float>(spec.ego_speed);
  for (int t = 0; t < spec.frames; ++t) {
    const bool anomalous = spec.onset >= 0 && t >= spec.onset;
    const int since = t - spec.onset;
    float ego_lateral = 0.05f * std::sin(0.15f * t + sway_phase);
    float pitch = 0.0f;

    if (anomalous) {
      switch (spec.anomaly) {
        case AnomalyType::kSuddenStop:
          if (!cars.empty()) cars[0].speed = -0.55f;
          speed *= 0.45f;
          pitch = since < 4 ? 2.5f : 1.0f;
          break;
        case AnomalyType::kCollisionCourse:
          cars[1].lateral -= cut_side * 0.14f;
          if (cut_side * cars[1].lateral < -0.2f) cars[1].lateral = -0.2f * cut_side;
          cars[1].speed = -0.5f;
          break;
        case AnomalyType::kErraticSwerve:
          ego_lateral += 0.7f * std::sin(1.4f * since) + 0.25f * std::sin(3.1f * since + 1.0f);
          pitch = 1.5f * std::sin(2.3f * since);
          break;
        case AnomalyType::kNone:
          break;
      }
    }
    travelled += speed;
    const float hz = horizon + pitch;

    for (auto& car : cars) {
      car.depth += car.speed;
      if (!anomalous || spec.anomaly == AnomalyType::kErraticSwerve) {
        if (car.depth < 3.5f) car.speed = std::abs(car.speed) + 0.02f;
        if (car.depth > kMaxDepth - 2) car.speed = -std::abs(car.speed) - 0.02f;
      }
      car.depth = std::max(car.depth, kMinDepth);
    }

    Frame frame(out.clip, t);
    for (int y = 0; y < spec.height; ++y) {
      const float fy = static_cast<float>(y) + 0.5f;
      if (fy <= hz) {
        const Rgb c = mix(sky_top, sky_low, std::clamp(fy / std::max(hz, 1.0f), 0.0f, 1.0f));
        for (int x = 0; x < spec.width; ++x) frame.put(x, y, c);
        continue;
      }
      const float depth = focal * kCameraHeight / (fy - hz);
      const float along = depth + travelled;
      for (int x = 0; x < spec.width; ++x) {
        const float lateral = (static_cast<float>(x) + 0.5f - cx) * depth / focal + ego_lateral;
        Rgb c;
        if (std::abs(lateral) < kRoadHalfWidth) {
          const float grain = hash01(static_cast<std::int64_t>(std::floor(along * 3)),
                                     static_cast<std::int64_t>(std::floor(lateral * 6)), salt);
          c = scaled(Rgb{asphalt, asphalt, asphalt * 1.05f}, 0.85f + 0.3f * grain);
          const float marking = 0.05f + 0.004f * depth;
          const bool edge = std::abs(std::abs(lateral) - (kRoadHalfWidth - 0.08f)) < marking;
          const bool dash = std::abs(std::abs(lateral) - kLaneHalfWidth) < marking &&
                            std::fmod(along, 2.4f) < 1.2f;
          if (edge || dash) c = Rgb{0.92f, 0.92f, 0.85f};
        } else {
          const bool band = static_cast<int>(std::floor(along / 1.5f)) % 2 == 0;
          c = scaled(grass, band ? 1.0f : 0.82f);
        }
        frame.put(x, y, c);
      }
    }

    std::vector<std::size_t> order(cars.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return cars[a].depth > cars[b].depth; });
    for (std::size_t k : order) {
      const Vehicle& car = cars[k];
      const float px = focal / car.depth;
      const float x_mid = cx + (car.lateral - ego_lateral) * px;
      const float bottom = hz + kCameraHeight * px;
      const float top = bottom - 0.75f * px;
      frame.rect(x_mid - 0.42f * px, top, x_mid + 0.42f * px, bottom, car.color);
      frame.rect(x_mid - 0.34f * px, top + 0.1f * px, x_mid + 0.34f * px, top + 0.32f * px,
                 scaled(car.color, 0.35f));
      frame.rect(x_mid - 0.4f * px, bottom - 0.18f * px, x_mid - 0.26f * px, bottom - 0.08f * px,
                 Rgb{0.9f, 0.15f, 0.1f});
      frame.rect(x_mid + 0.26f * px, bottom - 0.18f * px, x_mid + 0.4f * px, bottom - 0.08f * px,
                 Rgb{0.9f, 0.15f, 0.1f});
    }
  }
}

// ---- generic -----------------------------------------------------------------

struct Sprite {
  float x, y, vx, vy, radius, angle, spin;
  bool round;
  Rgb color;
};

void render_generic(const SceneSpec& spec, LabeledClip& out) {
  rnd::Engine rng(splitmix64(spec.seed ^ 0x9e1ULL));
  auto u = [](rnd::Engine& r) { return rnd::uniform01f(r); };
  const float w = static_cast<float>(spec.width), h = static_cast<float>(spec.height);
  const float hue = u(rng);
  const Rgb bg_a = hsv(hue, 0.5f + 0.4f * u(rng), 0.5f + 0.4f * u(rng));
  const Rgb bg_b = mix(bg_a, hsv(hue + 0.3f + 0.4f * u(rng), 0.4f + 0.5f * u(rng), 0.3f + 0.6f * u(rng)),
                        0.25f + 0.3f * u(rng));
  const float period = 16.0f + 24.0f * u(rng);
  float angle = 6.28f * u(rng);
  const float spin = (u(rng) - 0.5f) * 0.12f;
  const float drift_x = (u(rng) - 0.5f) * 1.2f, drift_y = (u(rng) - 0.5f) * 1.2f;
  const std::uint64_t salt = splitmix64(spec.seed);

  std::vector<Sprite> sprites;
  for (int i = 0; i < spec.agent_count; ++i) {
    Sprite s;
    s.radius = 3.0f + 0.12f * w * u(rng);
    s.x = s.radius + (w - 2 * s.radius) * u(rng);
    s.y = s.radius + (h - 2 * s.radius) * u(rng);
    const float dir = 6.28f * u(rng), sp = 0.6f + 2.0f * u(rng);
    s.vx = sp * std::cos(dir);
    s.vy = sp * std::sin(dir);
    s.angle = 6.28f * u(rng);
    s.spin = (u(rng) - 0.5f) * 0.5f;
    s.round = u(rng) < 0.5f;
    s.color = hsv(u(rng), 0.6f + 0.4f * u(rng), 0.6f + 0.4f * u(rng));
    sprites.push_back(s);
  }

  for (int t = 0; t < spec.frames; ++t) {
    Frame frame(out.clip, t);
    angle += spin;
    const float ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const float px = static_cast<float>(x) + drift_x * t, py = static_cast<float>(y) + drift_y * t;
        float k = 0;
        switch (spec.texture) {
          case TextureFamily::kStripes:
            k = 0.5f + 0.5f * std::sin((px * ca + py * sa) * 6.28f / period);
            break;
          case TextureFamily::kChecker:
            k = ((static_cast<int>(std::floor(px / period)) + static_cast<int>(std::floor(py / period))) & 1)
                    ? 1.0f : 0.0f;
            break;
          default:
            k = value_noise(px / period, py / period, salt);
            break;
        }
        frame.put(x, y, mix(bg_a, bg_b, k));
      }
    for (auto& s : sprites) {
      s.x += s.vx;
      s.y += s.vy;
      if (s.x < s.radius || s.x > w - s.radius) s.vx = -s.vx;
      if (s.y < s.radius || s.y > h - s.radius) s.vy = -s.vy;
      s.angle += s.spin;
      const float c = std::cos(s.angle), sn = std::sin(s.angle);
      for (int y = static_cast<int>(s.y - s.radius) - 1; y <= static_cast<int>(s.y + s.radius) + 1; ++y)
        for (int x = static_cast<int>(s.x - s.radius) - 1; x <= static_cast<int>(s.x + s.radius) + 1; ++x) {
          const float dx = static_cast<float>(x) + 0.5f - s.x, dy = static_cast<float>(y) + 0.5f - s.y;
          const float rx = dx * c + dy * sn, ry = -dx * sn + dy * c;
          const bool inside = s.round ? (rx * rx + ry * ry <= s.radius * s.radius)
                                      : (std::abs(rx) <= s.radius && std::abs(ry) <= s.radius);
          if (!inside) continue;
          frame.put(x, y, rx + ry < 0.0f ? s.color : scaled(s.color, 0.7f));
        }
    }
  }
}

std::string clip_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%04d", index);
  return buf;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::kGeneric: return "generic";
    case Domain::kDrivingNormal: return "driving-normal";
    case Domain::kDrivingAnomalous: return "driving-anomalous";
  }
  return "generic";
}

Domain parse_domain(std::string_view text) {
  if (text == "generic") return Domain::kGeneric;
  if (text == "driving-normal") return Domain::kDrivingNormal;
  if (text == "driving-anomalous") return Domain::kDrivingAnomalous;
  throw ConfigError("unknown domain '" + std::string(text) + "'");
}

std::string to_string(AnomalyType type) {
  switch (type) {
    case AnomalyType::kNone: return "none";
    case AnomalyType::kSuddenStop: return "sudden-stop";
    case AnomalyType::kCollisionCourse: return "collision-course";
    case AnomalyType::kErraticSwerve: return "erratic-swerve";
  }
  return "none";
}

SceneSpec SceneSpec::sample(Domain domain, std::uint64_t seed, int frames, int height, int width) {
  rnd::Engine rng(splitmix64(seed));
  auto u = [](rnd::Engine& r) { return rnd::uniform01(r); };
  SceneSpec s;
  s.domain = domain;
  s.frames = frames;
  s.height = height;
  s.width = width;
  s.seed = seed;
  if (domain == Domain::kGeneric) {
    s.ego_speed = 0.0;
    s.agent_count = 2 + static_cast<int>(rng() % 4);
    s.texture = static_cast<TextureFamily>(1 + rng() % 3);
  } else {
    s.ego_speed = 0.25 + 0.35 * u(rng);
    s.agent_count = 1 + static_cast<int>(rng() % 4);
    s.texture = TextureFamily::kAsphalt;
  }
  if (domain == Domain::kDrivingAnomalous) {
    s.anomaly = static_cast<AnomalyType>(1 + rng() % 3);
    const int lo = frames / 3;
    const int hi = std::max(lo, 2 * frames / 3);
    s.onset = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  return s;
}

void SceneSpec::validate() const {
  if (frames <= 0) throw ConfigError("scene must have at least one frame");
  if (height <= 0 || width <= 0 || channels <= 0) throw ConfigError("scene dimensions must be positive");
  if (agent_count < 0) throw ConfigError("agent count must be non-negative");
  const bool anomalous = domain == Domain::kDrivingAnomalous;
  if (anomalous != (anomaly != AnomalyType::kNone))
    throw ConfigError("anomaly type must be set exactly for the anomalous driving domain");
  if (anomalous && (onset < 0 || onset >= frames))
    throw ConfigError("anomaly onset " + std::to_string(onset) + " outside clip of " +
                      std::to_string(frames) + " frames");
  if (domain == Domain::kGeneric && texture == TextureFamily::kAsphalt)
    throw ConfigError("generic scenes need a non-road texture family");
}

int LabeledClip::anomalous_frames() const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

LabeledClip generate_clip(const SceneSpec& spec) {
  spec.validate();
  LabeledClip out;
  out.clip = VideoClip(spec.frames, spec.height, spec.width, spec.channels, spec.fps);
  out.labels.assign(static_cast<std::size_t>(spec.frames), 0);
  if (spec.onset >= 0)
    std::fill(out.labels.begin() + spec.onset, out.labels.end(), std::uint8_t{1});
  out.spec = spec;
  if (spec.domain == Domain::kGeneric) {
    render_generic(spec, out);
  } else {
    render_driving(spec, out);
  }
  return out;
}

std::string labels_path_for(const std::string& clip_path) {
  std::filesystem::path p(clip_path);
  p.replace_extension(".labels.csv");
  return p.string();
}

void write_clip(const std::string& path, const LabeledClip& lc) {
  const VideoClip& c = lc.clip;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write("CLP1", 4);
    write_u32(out, static_cast<std::uint32_t>(c.frames));
    write_u32(out, static_cast<std::uint32_t>(c.height));
    write_u32(out, static_cast<std::uint32_t>(c.width));
    write_u32(out, static_cast<std::uint32_t>(c.channels));
    out.write(reinterpret_cast<const char*>(c.pixels.data()), static_cast<std::streamsize>(c.pixels.size()));
    if (!out) throw Error("write failed for " + path);
  }
  if (lc.labeled()) {
    if (static_cast<int>(lc.labels.size()) != c.frames)
      throw ConfigError("label count " + std::to_string(lc.labels.size()) + " != frame count " +
                        std::to_string(c.frames));
    std::ofstream out(labels_path_for(path), std::ios::trunc);
    if (!out) throw Error("cannot write " + labels_path_for(path));
    out << "frame,label\n";
    for (std::size_t i = 0; i < lc.labels.size(); ++i) out << i << ',' << int(lc.labels[i]) << '\n';
  }
}

LabeledClip read_clip(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CLP1", 4) != 0)
    throw FormatError(path + ": not a CLP1 clip (bad magic)");
  if (bytes.size() < 20)
    throw FormatError(path + ": truncated header: expected 20 bytes, got " + std::to_string(bytes.size()));
  const std::uint32_t t = read_u32(&bytes[4]), h = read_u32(&bytes[8]), w = read_u32(&bytes[12]),
                      c = read_u32(&bytes[16]);
  if (!t || !h || !w || !c) throw FormatError(path + ": zero clip dimension");
  const std::uint64_t expected = static_cast<std::uint64_t>(t) * h * w * c;
  const std::uint64_t actual = bytes.size() - 20;
  if (actual != expected)
    throw FormatError(path + ": payload " + (actual < expected ? "truncated" : "oversized") +
                      ": expected " + std::to_string(expected) + " bytes, got " + std::to_string(actual));
  LabeledClip lc;
  lc.id = std::filesystem::path(path).stem().string();
  lc.clip = VideoClip(static_cast<int>(t), static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  std::copy(bytes.begin() + 20, bytes.end(), lc.clip.pixels.begin());

  const std::string lp = labels_path_for(path);
  if (std::filesystem::exists(lp)) {
    std::ifstream in(lp);
    std::string line;
    std::getline(in, line);
    if (line != "frame,label") throw FormatError(lp + ": expected header 'frame,label'");
    lc.labels.assign(t, 0);
    std::vector<std::uint8_t> seen(t, 0);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 2) throw FormatError(lp + ": bad row '" + line + "'");
      const long frame = std::stol(cells[0]);
      const long label = std::stol(cells[1]);
      if (frame < 0 || frame >= static_cast<long>(t) || (label != 0 && label != 1))
        throw FormatError(lp + ": bad row '" + line + "'");
      lc.labels[static_cast<std::size_t>(frame)] = static_cast<std::uint8_t>(label);
      seen[static_cast<std::size_t>(frame)] = 1;
    }
    if (std::count(seen.begin(), seen.end(), std::uint8_t{1}) != static_cast<long>(t))
      throw FormatError(lp + ": labels do not cover every frame");
  }
  return lc;
}

std::uint64_t derive_seed(std::uint64_t corpus_seed, std::uint64_t index) {
  return splitmix64(splitmix64(corpus_seed) + 0x632be59bd9b4e019ULL * (index + 1));
}

Corpus generate_corpus(const CorpusOptions& options) {
  if (options.count < 1) throw ConfigError("corpus needs at least one clip");
  if (!(options.anomaly_ratio >= 0 && options.anomaly_ratio <= 1))
    throw ConfigError("anomaly ratio must lie in [0, 1]");
  std::vector<std::uint8_t> anomalous(static_cast<std::size_t>(options.count), 0);
  if (options.domain == Domain::kDrivingAnomalous) {
    const auto k = static_cast<std::size_t>(std::llround(options.count * options.anomaly_ratio));
    std::vector<std::size_t> order(anomalous.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rnd::Engine rng(splitmix64(options.seed ^ 0xa11ULL));
    rnd::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < k; ++i) anomalous[order[i]] = 1;
  }
  Corpus corpus;
  corpus.domain = to_string(options.domain);
  corpus.clips.resize(static_cast<std::size_t>(options.count));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < options.count; ++i) {
    const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(i));
    Domain d = options.domain;
    if (d == Domain::kDrivingAnomalous && !anomalous[static_cast<std::size_t>(i)]) d = Domain::kDrivingNormal;
    LabeledClip clip = generate_clip(SceneSpec::sample(d, seed, options.frames, options.height, options.width));
    clip.id = clip_id(i);
    corpus.clips[static_cast<std::size_t>(i)] = std::move(clip);
  }
  return corpus;
}

std::vector<ManifestRow> manifest_of(const Corpus& corpus) {
  std::vector<ManifestRow> rows;
  for (const auto& c : corpus.clips) {
    ManifestRow r;
    r.id = c.id;
    r.domain = c.spec ? to_string(c.spec->domain) : corpus.domain;
    r.frames = c.clip.frames;
    r.anomalous_frames = c.anomalous_frames();
    r.seed = c.spec ? c.spec->seed : 0;
    rows.push_back(r);
  }
  return rows;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "id,domain,frames,anomalous_frames,seed\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.domain << ',' << r.frames << ',' << r.anomalous_frames << ',' << r.seed << '\n';
  if (!out) throw Error("write failed for " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "id,domain,frames,anomalous_frames,seed")
    throw FormatError(path + ": unexpected manifest header '" + line + "'");
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw FormatError(path + ": bad manifest row '" + line + "'");
    rows.push_back({cells[0], cells[1], std::stoi(cells[2]), std::stoi(cells[3]), std::stoull(cells[4])});
  }
  return rows;
}

std::vector<ManifestRow> build_corpus(const CorpusOptions& options, const std::string& dir) {
  const Corpus corpus = generate_corpus(options);
  std::filesystem::create_directories(dir);
  for (const auto& c : corpus.clips) write_clip((std::filesystem::path(dir) / (c.id + ".clp")).string(), c);
  const auto rows = manifest_of(corpus);
  write_manifest((std::filesystem::path(dir) / "manifest.csv").string(), rows);
  KeyValueText meta;
  meta.set("domain", corpus.domain);
  meta.set("count", options.count);
  meta.set("seed", std::to_string(options.seed));
  meta.set("anomaly_ratio", options.anomaly_ratio);
  meta.set("frames", options.frames);
  meta.set("height", options.height);
  meta.set("width", options.width);
  meta.save((std::filesystem::path(dir) / "corpus.cfg").string());
  return rows;
}

Corpus load_corpus(const std::string& dir) {
  const std::filesystem::path root(dir);
  const auto rows = read_manifest((root / "manifest.csv").string());
  if (rows.empty()) throw ConfigError("corpus " + dir + " is empty");
  Corpus corpus;
  const auto meta_path = root / "corpus.cfg";
  corpus.domain = std::filesystem::exists(meta_path) ? KeyValueText::load(meta_path.string()).at("domain")
                                                     : rows.front().domain;
  for (const auto& r : rows) {
    LabeledClip c = read_clip((root / (r.id + ".clp")).string());
    c.id = r.id;
    if (c.clip.frames != r.frames)
      throw FormatError(r.id + ": manifest says " + std::to_string(r.frames) + " frames, file has " +
                        std::to_string(c.clip.frames));
    corpus.clips.push_back(std::move(c));
  }
  return corpus;
}

}  // namespace tadvit
