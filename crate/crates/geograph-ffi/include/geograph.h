#ifndef GEOGRAPH_H
#define GEOGRAPH_H

/* Generated from the geograph-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Anything other than `Ok` leaves a description in
 * `geograph_last_error`.
 */
typedef enum GeoGraphStatus {
  /**
   * The call succeeded.
   */
  GEO_GRAPH_STATUS_OK = 0,
  /**
   * A pointer was null, a string was not UTF-8, or a flag value was
   * out of range.
   */
  GEO_GRAPH_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The input data violated a documented contract.
   */
  GEO_GRAPH_STATUS_INPUT_ERROR = 2,
  /**
   * An internal invariant failed; the handle state is unspecified.
   */
  GEO_GRAPH_STATUS_INTERNAL_ERROR = 3,
  /**
   * The provided buffer cannot hold the result.
   */
  GEO_GRAPH_STATUS_BUFFER_TOO_SMALL = 4,
} GeoGraphStatus;

/**
 * An owned graph. Opaque: allocate through the constructors, release
 * with `geograph_free`.
 */
typedef struct GeoGraphHandle GeoGraphHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer is
 * valid until the next failing call on the same thread. Never null.
 */
const char *geograph_last_error(void);

/**
 * Release a graph returned by any constructor. A null handle is a
 * no-op.
 *
 * # Safety
 * `handle` must be null or a live pointer from a constructor, and
 * must not be used afterwards.
 */
void geograph_free(struct GeoGraphHandle *handle);

/**
 * Parse a graph from a GeoJSON document (the toolkit's interchange
 * form: Point features with `node_id`, LineString features with
 * `source`/`target`/`weight`).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum GeoGraphStatus geograph_from_geojson(const char *text, struct GeoGraphHandle **out);

/**
 * Build a graph from a polyline shapefile: features become nodes,
 * features whose geometries (mode 0) or part endpoints (mode 1) come
 * within `tol` become connected.
 *
 * # Safety
 * `stem` must be a NUL-terminated path; `out` must be valid.
 */
enum GeoGraphStatus geograph_extract_shapefile(const char *stem,
                                               double tol,
                                               int endpoint_mode,
                                               struct GeoGraphHandle **out);

/**
 * Build a street graph from OpenStreetMap XML text. `filter` selects
 * ways: `"*"`, a tag key such as `"highway"`, or `"key=v1|v2"`.
 *
 * # Safety
 * `xml` and `filter` must be NUL-terminated strings; `out` must be
 * valid.
 */
enum GeoGraphStatus geograph_from_osm_xml(const char *xml,
                                          const char *filter,
                                          struct GeoGraphHandle **out);

/**
 * Bind a point shapefile (integer `id` field required) to a 0/1
 * adjacency matrix CSV.
 *
 * # Safety
 * `points_stem` and `adjacency_csv` must be NUL-terminated paths;
 * `out` must be valid.
 */
enum GeoGraphStatus geograph_from_adjacency(const char *points_stem,
                                            const char *adjacency_csv,
                                            struct GeoGraphHandle **out);

/**
 * Connect located time series whose Pearson correlation strictly
 * exceeds `tau`. `min_overlap` below 0 selects the default (10 when
 * observations are missing, the full length otherwise).
 *
 * # Safety
 * `series_csv` and `locations_csv` must be NUL-terminated paths;
 * `out` must be valid.
 */
enum GeoGraphStatus geograph_correlation_network(const char *series_csv,
                                                 const char *locations_csv,
                                                 double tau,
                                                 long min_overlap,
                                                 struct GeoGraphHandle **out);

/**
 * Connect traffic zones whose summed two-way flow strictly exceeds
 * `tau`. Nodes carry a `degree` attribute.
 *
 * # Safety
 * `od_csv` and `zones_csv` must be NUL-terminated paths; `out` must
 * be valid.
 */
enum GeoGraphStatus geograph_flow_network(const char *od_csv,
                                          const char *zones_csv,
                                          double tau,
                                          struct GeoGraphHandle **out);

/**
 * Number of nodes.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be valid.
 */
enum GeoGraphStatus geograph_node_count(const struct GeoGraphHandle *handle, size_t *out);

/**
 * Number of edges.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be valid.
 */
enum GeoGraphStatus geograph_edge_count(const struct GeoGraphHandle *handle, size_t *out);

/**
 * Fill `buf` with all node ids in ascending order. `cap` is the
 * capacity of `buf` in elements; `geograph_node_count` gives the
 * required size.
 *
 * # Safety
 * `handle` must be a live handle; `buf` must point to at least `cap`
 * writable elements.
 */
enum GeoGraphStatus geograph_node_ids(const struct GeoGraphHandle *handle,
                                      int64_t *buf,
                                      size_t cap);

/**
 * Location of one node.
 *
 * # Safety
 * `handle` must be a live handle; `x` and `y` must be valid.
 */
enum GeoGraphStatus geograph_node_location(const struct GeoGraphHandle *handle,
                                           int64_t node_id,
                                           double *x,
                                           double *y);

/**
 * Fill `buf` with each node's degree, ordered by ascending node id
 * (the order `geograph_node_ids` reports).
 *
 * # Safety
 * `handle` must be a live handle; `buf` must point to at least `cap`
 * writable doubles.
 */
enum GeoGraphStatus geograph_degree(const struct GeoGraphHandle *handle, double *buf, size_t cap);

/**
 * Fill `buf` with each node's local clustering coefficient, ordered
 * by ascending node id.
 *
 * # Safety
 * `handle` must be a live handle; `buf` must point to at least `cap`
 * writable doubles.
 */
enum GeoGraphStatus geograph_clustering(const struct GeoGraphHandle *handle,
                                        double *buf,
                                        size_t cap);

/**
 * Fill `buf` with each node's betweenness centrality, ordered by
 * ascending node id. Nonzero `normalized` divides by the number of
 * node pairs; nonzero `weighted` uses edge weights as costs.
 *
 * # Safety
 * `handle` must be a live handle; `buf` must point to at least `cap`
 * writable doubles.
 */
enum GeoGraphStatus geograph_betweenness(const struct GeoGraphHandle *handle,
                                         int normalized,
                                         int weighted,
                                         double *buf,
                                         size_t cap);

/**
 * Attach the selected metrics (nonzero flags) to the graph as node
 * attributes, so subsequent writers emit them.
 *
 * # Safety
 * `handle` must be a live, exclusively held handle.
 */
enum GeoGraphStatus geograph_attach_metrics(struct GeoGraphHandle *handle,
                                            int with_degree,
                                            int with_clustering,
                                            int with_betweenness,
                                            int normalized,
                                            int weighted);

/**
 * Write `<stem>_nodes.{shp,shx,dbf}` and `<stem>_edges.{shp,shx,dbf}`.
 *
 * # Safety
 * `handle` must be a live handle; `stem` must be a NUL-terminated
 * path.
 */
enum GeoGraphStatus geograph_write_shapefiles(const struct GeoGraphHandle *handle,
                                              const char *stem);

/**
 * Serialize the graph as GeoJSON into `buf` (NUL-terminated). Sets
 * `*needed` to the required capacity including the terminator. When
 * `buf` is null or `cap` is too small, returns `BufferTooSmall` with
 * `*needed` set, so call once with `cap` 0 to size the buffer.
 *
 * # Safety
 * `handle` must be a live handle; `needed` must be valid; `buf` must
 * point to at least `cap` writable bytes when non-null.
 */
enum GeoGraphStatus geograph_to_geojson(const struct GeoGraphHandle *handle,
                                        char *buf,
                                        size_t cap,
                                        size_t *needed);

/**
 * Write the graph as a GeoJSON document to `path` (atomically).
 *
 * # Safety
 * `handle` must be a live handle; `path` must be a NUL-terminated
 * path.
 */
enum GeoGraphStatus geograph_write_geojson(const struct GeoGraphHandle *handle, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOGRAPH_H */
