#include "dex/scene.hpp"

#include <cmath>

#include "dex/error.hpp"

namespace dex {

void ArticulationSpec::validate() const {
  if (std::abs(axis.norm() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "articulation axis must be unit length");
  if (!origin.allFinite()) throw Error(ErrorCode::InvalidArgument, "articulation origin must be finite");
  if (!(cone_half_angle > 0.0)) throw Error(ErrorCode::InvalidArgument, "cone half-angle must be positive");
}

Scene Scene::single(TriMesh object) {
  Scene s;
  s.meshes.push_back(std::make_shared<const IndexedMesh>(std::move(object)));
  return s;
}

Scene Scene::with_table(TriMesh object, double table_height, double half_size, double thickness) {
  Scene s = single(std::move(object));
  const Vec3 center(0.0, 0.0, table_height - 0.5 * thickness);
  s.meshes.push_back(std::make_shared<const IndexedMesh>(make_box(Vec3(half_size, half_size, 0.5 * thickness), center)));
  return s;
}

}  // namespace dex
