#include "vpflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace vpflow {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Number of grid cells spanning `length` at the given density, or nullopt
// when the interface does not fall on a grid line.
std::optional<int> cells_for(double length, int cells_per_unit)
{
    const double n = length * cells_per_unit;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
        return std::nullopt;
    }
    return static_cast<int>(rounded);
}

void finalize_boundary(Mesh& mesh, const std::function<BoundaryTag(const Vec2&)>& tag_of)
{
    std::map<EdgeKey, int> count;
    std::map<EdgeKey, std::array<int, 2>> oriented;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            auto key = edge_key(a, b);
            ++count[key];
            oriented[key] = {a, b};
        }
    }
    mesh.boundary_edges.clear();
    for (const auto& [key, n] : count) {
        if (n != 1) {
            continue;
        }
        const auto v = oriented[key];
        const Vec2 mid = 0.5 * (mesh.vertices[v[0]] + mesh.vertices[v[1]]);
        mesh.boundary_edges.push_back({v, tag_of(mid)});
    }
}

void update_h_max(Mesh& mesh)
{
    mesh.h_max = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        mesh.h_max = std::max(mesh.h_max, triangle_diameter(mesh, t));
    }
}

// Tensor-product grid on the given lines, keeping the cells whose centre
// satisfies `inside`. Unused vertices are dropped.
Mesh build_tensor_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::function<bool(const Vec2&)>& inside)
{
    const int nx = static_cast<int>(xs.size()) - 1;
    const int ny = static_cast<int>(ys.size()) - 1;
    std::vector<int> index((nx + 1) * (ny + 1), -1);
    Mesh mesh;
    auto vertex = [&](int i, int j) {
        int& id = index[j * (nx + 1) + i];
        if (id < 0) {
            id = static_cast<int>(mesh.vertices.size());
            mesh.vertices.emplace_back(xs[i], ys[j]);
        }
        return id;
    };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 centre(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            if (!inside(centre)) {
                continue;
            }
            const int v00 = vertex(i, j);
            const int v10 = vertex(i + 1, j);
            const int v11 = vertex(i + 1, j + 1);
            const int v01 = vertex(i, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }
    update_h_max(mesh);
    return mesh;
}

void append_lines(std::vector<double>& lines, const std::vector<double>& more)
{
    for (double x : more) {
        if (x > lines.back()) lines.push_back(x);
    }
}

// Grid lines on [a, b] whose spacing grows linearly with the distance from
// either end, from h_a (h_b) at the end up to `coarse`.
std::vector<double> graded_lines(double a, double b, double h_a, double h_b, double coarse, double growth)
{
    const double rate = growth - 1.0;
    auto spacing = [&](double x) {
        return std::min({coarse, h_a + rate * (x - a), h_b + rate * (b - x)});
    };
    constexpr int samples = 20000;
    const double dx = (b - a) / samples;
    std::vector<double> cumulative(samples + 1, 0.0);
    for (int i = 0; i < samples; ++i) {
        cumulative[i + 1] = cumulative[i] + dx / spacing(a + (i + 0.5) * dx);
    }
    const int n = std::max(1, static_cast<int>(std::ceil(cumulative.back() - 1e-9)));
    std::vector<double> lines{a};
    int i = 0;
    for (int k = 1; k < n; ++k) {
        const double target = cumulative.back() * k / n;
        while (cumulative[i + 1] < target) ++i;
        const double t = (target - cumulative[i]) / (cumulative[i + 1] - cumulative[i]);
        lines.push_back(a + (i + t) * dx);
    }
    lines.push_back(b);
    return lines;
}

Mesh channel_from_lines(const std::vector<double>& xs, const std::vector<double>& ys, double half_cavity,
                        double x_end)
{
    Mesh mesh = build_tensor_grid(xs, ys, [&](const Vec2& c) {
        return std::abs(c.y()) < 1.0 || std::abs(c.x()) < half_cavity;
    });
    const double tol = 1e-12 * x_end;
    finalize_boundary(mesh, [&](const Vec2& m) {
        if (m.x() < -x_end + tol) return BoundaryTag::Inflow;
        if (m.x() > x_end - tol) return BoundaryTag::Outflow;
        return BoundaryTag::Wall;
    });
    return mesh;
}

std::vector<double> uniform_lines(double start, double length, int n)
{
    std::vector<double> lines(n + 1);
    for (int i = 0; i <= n; ++i) {
        lines[i] = start + length * static_cast<double>(i) / n;
    }
    lines.back() = start + length;
    return lines;
}

} // namespace

std::string_view to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::Inflow: return "inflow";
    case BoundaryTag::Outflow: return "outflow";
    case BoundaryTag::Wall: return "wall";
    case BoundaryTag::Lid: return "lid";
    }
    return "unknown";
}

Mesh build_rectangle(const Vec2& origin, const Vec2& extent, int nx, int ny)
{
    if (nx < 1 || ny < 1) {
        throw std::invalid_argument("build_rectangle: cell counts must be positive");
    }
    if (!(extent.x() > 0.0) || !(extent.y() > 0.0)) {
        throw std::invalid_argument("build_rectangle: extents must be positive");
    }
    Mesh mesh = build_tensor_grid(uniform_lines(origin.x(), extent.x(), nx),
                                  uniform_lines(origin.y(), extent.y(), ny),
                                  [](const Vec2&) { return true; });
    finalize_boundary(mesh, [](const Vec2&) { return BoundaryTag::Wall; });
    return mesh;
}

Mesh build_channel(double l_hat, double delta, double h, int cells_per_unit)
{
    if (!(h > 1.0)) {
        throw std::invalid_argument("build_channel: cavity half-width h must exceed 1");
    }
    if (!(delta > 0.0) || !(l_hat > 0.0)) {
        throw std::invalid_argument("build_channel: l_hat and delta must be positive");
    }
    if (cells_per_unit < 1) {
        throw std::invalid_argument("build_channel: cells_per_unit must be positive");
    }
    const double half_cavity = 0.5 / delta;
    const double x_end = l_hat + half_cavity;

    const auto n_section = cells_for(l_hat, cells_per_unit);
    const auto n_cavity = cells_for(2.0 * half_cavity, cells_per_unit);
    const auto n_step = cells_for(h - 1.0, cells_per_unit);
    const auto n_core = cells_for(2.0, cells_per_unit);
    if (!n_section || !n_cavity || !n_step || !n_core) {
        throw std::invalid_argument(
            "build_channel: cells_per_unit does not align grid lines with the channel interfaces");
    }

    std::vector<double> xs = uniform_lines(-x_end, l_hat, *n_section);
    for (double x : uniform_lines(-half_cavity, 2.0 * half_cavity, *n_cavity)) {
        if (x > xs.back()) xs.push_back(x);
    }
    for (double x : uniform_lines(half_cavity, l_hat, *n_section)) {
        if (x > xs.back()) xs.push_back(x);
    }
    std::vector<double> ys = uniform_lines(-h, h - 1.0, *n_step);
    for (double y : uniform_lines(-1.0, 2.0, *n_core)) {
        if (y > ys.back()) ys.push_back(y);
    }
    for (double y : uniform_lines(1.0, h - 1.0, *n_step)) {
        if (y > ys.back()) ys.push_back(y);
    }

    return channel_from_lines(xs, ys, half_cavity, x_end);
}

Mesh build_channel_graded(double l_hat, double delta, double h, const ChannelGrading& grading)
{
    if (!(h > 1.0)) {
        throw std::invalid_argument("build_channel_graded: cavity half-width h must exceed 1");
    }
    if (!(delta > 0.0) || !(l_hat > 0.0)) {
        throw std::invalid_argument("build_channel_graded: l_hat and delta must be positive");
    }
    if (!(grading.fine > 0.0) || !(grading.coarse >= grading.fine) || !(grading.growth > 1.0)) {
        throw std::invalid_argument("build_channel_graded: need 0 < fine <= coarse and growth > 1");
    }
    const double half_cavity = 0.5 / delta;
    const double x_end = l_hat + half_cavity;
    const double f = grading.fine;
    const double c = grading.coarse;
    const double g = grading.growth;

    std::vector<double> xs = graded_lines(-x_end, -half_cavity, c, f, c, g);
    append_lines(xs, graded_lines(-half_cavity, half_cavity, f, f, c, g));
    append_lines(xs, graded_lines(half_cavity, x_end, f, c, c, g));
    std::vector<double> ys = graded_lines(-h, -1.0, f, f, f, g);
    append_lines(ys, graded_lines(-1.0, 1.0, f, f, c, g));
    append_lines(ys, graded_lines(1.0, h, f, f, f, g));
    return channel_from_lines(xs, ys, half_cavity, x_end);
}

Mesh refine_uniform(const Mesh& mesh)
{
    Mesh fine;
    fine.vertices = mesh.vertices;
    std::map<EdgeKey, int> midpoint;
    auto mid = [&](int a, int b) {
        auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), 0);
        if (inserted) {
            it->second = static_cast<int>(fine.vertices.size());
            fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
        }
        return it->second;
    };
    fine.triangles.reserve(4 * mesh.num_triangles());
    for (const auto& t : mesh.triangles) {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        fine.triangles.push_back({a, ab, ca});
        fine.triangles.push_back({ab, b, bc});
        fine.triangles.push_back({ca, bc, c});
        fine.triangles.push_back({ab, bc, ca});
    }
    fine.boundary_edges.reserve(2 * mesh.boundary_edges.size());
    for (const auto& e : mesh.boundary_edges) {
        const int m = midpoint.at(edge_key(e.vertices[0], e.vertices[1]));
        fine.boundary_edges.push_back({{e.vertices[0], m}, e.tag});
        fine.boundary_edges.push_back({{m, e.vertices[1]}, e.tag});
    }
    update_h_max(fine);
    return fine;
}

Mesh refine_uniform(const Mesh& mesh, int times)
{
    if (times < 0) {
        throw std::invalid_argument("refine_uniform: negative refinement count");
    }
    Mesh out = mesh;
    for (int i = 0; i < times; ++i) {
        out = refine_uniform(out);
    }
    return out;
}

void retag_boundary(Mesh& mesh, const std::function<bool(const Vec2&)>& where, BoundaryTag tag)
{
    for (auto& e : mesh.boundary_edges) {
        const Vec2 mid = 0.5 * (mesh.vertices[e.vertices[0]] + mesh.vertices[e.vertices[1]]);
        if (where(mid)) {
            e.tag = tag;
        }
    }
}

double triangle_signed_area(const Mesh& mesh, std::size_t tri)
{
    const auto& t = mesh.triangles[tri];
    const Vec2 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec2 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double triangle_diameter(const Mesh& mesh, std::size_t tri)
{
    const auto& t = mesh.triangles[tri];
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
        d = std::max(d, (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm());
    }
    return d;
}

double total_area(const Mesh& mesh)
{
    double a = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        a += triangle_signed_area(mesh, t);
    }
    return a;
}

std::size_t count_edges(const Mesh& mesh)
{
    std::map<EdgeKey, int> edges;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            ++edges[edge_key(t[k], t[(k + 1) % 3])];
        }
    }
    return edges.size();
}

std::vector<std::optional<BoundaryTag>> vertex_boundary_tags(const Mesh& mesh)
{
    auto priority = [](BoundaryTag t) {
        switch (t) {
        case BoundaryTag::Wall: return 3;
        case BoundaryTag::Inflow:
        case BoundaryTag::Outflow: return 2;
        case BoundaryTag::Lid: return 1;
        }
        return 0;
    };
    std::vector<std::optional<BoundaryTag>> tags(mesh.num_vertices());
    for (const auto& e : mesh.boundary_edges) {
        for (int v : e.vertices) {
            if (!tags[v] || priority(e.tag) > priority(*tags[v])) {
                tags[v] = e.tag;
            }
        }
    }
    return tags;
}

std::vector<std::string> check_mesh(const Mesh& mesh, int holes)
{
    std::vector<std::string> problems;
    const auto nv = static_cast<int>(mesh.num_vertices());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        for (int v : mesh.triangles[t]) {
            if (v < 0 || v >= nv) {
                problems.push_back("triangle " + std::to_string(t) + " references a missing vertex");
                return problems;
            }
        }
        if (!(triangle_signed_area(mesh, t) > 0.0)) {
            problems.push_back("triangle " + std::to_string(t) + " has non-positive area");
        }
    }

    // Each directed edge may appear once; its reverse belongs to the neighbour.
    std::map<EdgeKey, int> directed;
    std::map<EdgeKey, int> undirected;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if (++directed[{a, b}] > 1) {
                problems.push_back("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                   ") is used twice with the same orientation");
            }
            ++undirected[edge_key(a, b)];
        }
    }
    std::map<EdgeKey, int> boundary;
    for (const auto& e : mesh.boundary_edges) {
        ++boundary[edge_key(e.vertices[0], e.vertices[1])];
    }
    for (const auto& [key, n] : undirected) {
        const bool on_boundary = boundary.count(key) > 0;
        if (n > 2) {
            problems.push_back("edge shared by more than two triangles (non-conforming)");
        } else if (n == 1 && !on_boundary) {
            problems.push_back("edge with a single triangle is missing from the boundary list");
        } else if (n == 2 && on_boundary) {
            problems.push_back("interior edge listed as boundary");
        }
    }
    for (const auto& [key, n] : boundary) {
        if (n != 1) {
            problems.push_back("boundary edge listed more than once");
        }
        if (undirected.count(key) == 0) {
            problems.push_back("boundary edge does not belong to any triangle");
        }
    }

    const long euler = static_cast<long>(mesh.num_vertices()) - static_cast<long>(undirected.size()) +
                       static_cast<long>(mesh.num_triangles());
    if (euler != 1 - holes) {
        problems.push_back("Euler relation violated: V - E + T = " + std::to_string(euler));
    }
    return problems;
}

} // namespace vpflow
