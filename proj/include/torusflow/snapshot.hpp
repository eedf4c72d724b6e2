#pragma once

// Binary field snapshots. One field per file:
//   magic "TFSNAP01" (8 bytes)
//   u32 n, u32 kind, u32 ncomp, u32 spin bits (bit0 x, bit1 y antiperiodic)
//   f64 g11, g12, g22 (flat background), f64 time
//   payload: ncomp row-major f64 arrays; spinors store each complex component
//   as one interleaved (re, im) array of 2 n^2 doubles.
// Files are written to <path>.tmp and renamed, so a crashed run never leaves
// a torn snapshot behind.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusflow/flat_metric.hpp"
#include "torusflow/grid.hpp"
#include "torusflow/spin_frame.hpp"

namespace torusflow {

enum class FieldKind : uint32_t {
  scalar = 0,
  vector = 1,
  oneform = 2,
  symtensor = 3,
  spinor = 4,
  map = 5,
  frame = 6,
};

struct Snapshot {
  int n = 0;
  FieldKind kind = FieldKind::scalar;
  SpinStructure spin;
  FlatMetric G;
  double time = 0.0;
  std::vector<std::vector<double>> components;
};

namespace detail {

constexpr char kSnapMagic[8] = {'T', 'F', 'S', 'N', 'A', 'P', '0', '1'};

inline void put_u32(std::string& buf, uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 4);
}
inline void put_f64(std::string& buf, double v) {
  buf.append(reinterpret_cast<const char*>(&v), 8);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::string buf;
  buf.append(detail::kSnapMagic, 8);
  detail::put_u32(buf, static_cast<uint32_t>(snap.n));
  detail::put_u32(buf, static_cast<uint32_t>(snap.kind));
  detail::put_u32(buf, static_cast<uint32_t>(snap.components.size()));
  detail::put_u32(buf, static_cast<uint32_t>(snap.spin.parity_x | (snap.spin.parity_y << 1)));
  detail::put_f64(buf, snap.G.g11);
  detail::put_f64(buf, snap.G.g12);
  detail::put_f64(buf, snap.G.g22);
  detail::put_f64(buf, snap.time);
  for (const auto& comp : snap.components)
    buf.append(reinterpret_cast<const char*>(comp.data()), comp.size() * sizeof(double));
  detail::write_file_atomic(path, buf);
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 48 || std::memcmp(bytes.data(), detail::kSnapMagic, 8) != 0)
    throw std::runtime_error("not a field snapshot: " + path.string());
  size_t off = 8;
  auto get_u32 = [&]() {
    uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    off += 4;
    return v;
  };
  auto get_f64 = [&]() {
    double v;
    std::memcpy(&v, bytes.data() + off, 8);
    off += 8;
    return v;
  };
  Snapshot snap;
  snap.n = static_cast<int>(get_u32());
  snap.kind = static_cast<FieldKind>(get_u32());
  uint32_t ncomp = get_u32();
  uint32_t bits = get_u32();
  snap.spin.parity_x = bits & 1;
  snap.spin.parity_y = (bits >> 1) & 1;
  snap.G.g11 = get_f64();
  snap.G.g12 = get_f64();
  snap.G.g22 = get_f64();
  snap.time = get_f64();
  size_t n2 = static_cast<size_t>(snap.n) * snap.n;
  size_t per = snap.kind == FieldKind::spinor ? 2 * n2 : n2;
  if (bytes.size() != off + static_cast<size_t>(ncomp) * per * sizeof(double))
    throw std::runtime_error("torn or truncated snapshot: " + path.string());
  snap.components.resize(ncomp);
  for (auto& comp : snap.components) {
    comp.resize(per);
    std::memcpy(comp.data(), bytes.data() + off, per * sizeof(double));
    off += per * sizeof(double);
  }
  return snap;
}

// Typed wrappers -------------------------------------------------------------

inline Snapshot make_snapshot(const ScalarField& f, const FlatMetric& G, double t) {
  Snapshot s;
  s.n = f.n;
  s.kind = FieldKind::scalar;
  s.G = G;
  s.time = t;
  s.components = {f.v};
  return s;
}

inline Snapshot make_snapshot(const MapField& m, const FlatMetric& G, double t) {
  Snapshot s;
  s.n = m.n();
  s.kind = FieldKind::map;
  s.G = G;
  s.time = t;
  s.components = {m.x.v, m.y.v, m.z.v};
  return s;
}

inline Snapshot make_snapshot(const SpinorField& phi, const FlatMetric& G, double t) {
  Snapshot s;
  s.n = phi.n;
  s.kind = FieldKind::spinor;
  s.spin = phi.spin;
  s.G = G;
  s.time = t;
  s.components.resize(2);
  for (int c = 0; c < 2; ++c) {
    const auto& src = c == 0 ? phi.a : phi.b;
    auto& dst = s.components[c];
    dst.resize(2 * src.size());
    for (size_t i = 0; i < src.size(); ++i) {
      dst[2 * i] = src[i].real();
      dst[2 * i + 1] = src[i].imag();
    }
  }
  return s;
}

inline Snapshot make_snapshot(const FrameField& F, double t) {
  Snapshot s;
  s.n = F.n;
  s.kind = FieldKind::frame;
  s.time = t;
  s.components = {F.e1x.v, F.e1y.v, F.e2x.v, F.e2y.v};
  return s;
}

inline ScalarField scalar_from_snapshot(const Snapshot& s) {
  if (s.kind != FieldKind::scalar || s.components.size() != 1)
    throw std::runtime_error("snapshot is not a scalar field");
  ScalarField f(s.n);
  f.v = s.components[0];
  return f;
}

inline MapField map_from_snapshot(const Snapshot& s) {
  if (s.kind != FieldKind::map || s.components.size() != 3)
    throw std::runtime_error("snapshot is not a map field");
  MapField m(s.n);
  m.x.v = s.components[0];
  m.y.v = s.components[1];
  m.z.v = s.components[2];
  return m;
}

inline SpinorField spinor_from_snapshot(const Snapshot& s) {
  if (s.kind != FieldKind::spinor || s.components.size() != 2)
    throw std::runtime_error("snapshot is not a spinor field");
  SpinorField phi(s.n, s.spin);
  for (int c = 0; c < 2; ++c) {
    auto& dst = c == 0 ? phi.a : phi.b;
    const auto& src = s.components[c];
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = cplx(src[2 * i], src[2 * i + 1]);
  }
  return phi;
}

inline FrameField frame_from_snapshot(const Snapshot& s) {
  if (s.kind != FieldKind::frame || s.components.size() != 4)
    throw std::runtime_error("snapshot is not a frame field");
  FrameField F(s.n);
  F.e1x.v = s.components[0];
  F.e1y.v = s.components[1];
  F.e2x.v = s.components[2];
  F.e2y.v = s.components[3];
  return F;
}

}  // namespace torusflow
