#include "livseg/volumes/components.hpp"

#include <algorithm>

namespace livseg::volumes {

std::vector<Index3> neighbour_offsets(Connectivity connectivity) {
    std::vector<Index3> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                switch (connectivity) {
                case Connectivity::Six:
                    if (manhattan == 1) out.push_back({dx, dy, dz});
                    break;
                case Connectivity::TwentySix:
                    out.push_back({dx, dy, dz});
                    break;
                case Connectivity::InPlaneEight:
                    if (dz == 0) out.push_back({dx, dy, dz});
                    break;
                }
            }
    return out;
}

Labeling connected_components(const Mask3D& m, Connectivity connectivity) {
    const Grid& g = m.grid();
    Labeling out;
    out.grid = g;
    out.labels.assign(g.size(), 0);
    const auto offsets = neighbour_offsets(connectivity);
    std::vector<std::size_t> queue;

    for (std::size_t start = 0; start < g.size(); ++start) {
        if (!m.test(start) || out.labels[start] != 0) continue;
        const int label = static_cast<int>(out.components.size()) + 1;
        Component comp;
        comp.label = label;
        const Index3 p0 = g.coords(start);
        comp.bbox = {p0, p0};
        queue.clear();
        queue.push_back(start);
        out.labels[start] = label;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t cur = queue[head];
            const Index3 p = g.coords(cur);
            comp.bbox.lo = {std::min(comp.bbox.lo.x, p.x), std::min(comp.bbox.lo.y, p.y), std::min(comp.bbox.lo.z, p.z)};
            comp.bbox.hi = {std::max(comp.bbox.hi.x, p.x), std::max(comp.bbox.hi.y, p.y), std::max(comp.bbox.hi.z, p.z)};
            for (const auto& o : offsets) {
                const int x = p.x + o.x, y = p.y + o.y, z = p.z + o.z;
                if (!g.contains(x, y, z)) continue;
                const std::size_t n = g.index(x, y, z);
                if (m.test(n) && out.labels[n] == 0) {
                    out.labels[n] = label;
                    queue.push_back(n);
                }
            }
        }
        comp.voxels = queue;
        std::sort(comp.voxels.begin(), comp.voxels.end());
        comp.size = comp.voxels.size();
        out.components.push_back(std::move(comp));
    }
    return out;
}

} // namespace livseg::volumes
