"""Estimator-style front end so the pipeline composes with the scikit-learn
ecosystem: constructor parameters only store themselves, ``fit`` learns the
geometry, fitted state lives in trailing-underscore attributes, and
``get_params``/``set_params``/``clone`` behave as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import geometry
from .composition import BlendConfig, compute_canvas, stitch_all
from .masks import fallback_segment
from .register import RegistrationConfig, register_pair
from .seam import SeamWeights
from .validation import check_image


class PointSetRegistration(BaseEstimator, TransformerMixin):
    """Fit the planar transform warping one screw-centroid set onto another.

    ``fit(X, y)`` treats X as the source set and y as the destination set;
    the fitted ``homography_`` maps source coordinates into the destination
    frame and ``transform`` applies it to points.

    Parameters mirror the registration section of the pipeline config;
    ``bounds`` is the (width, height) of the destination image and enables
    the overlap-restricted energy when given.
    """

    def __init__(
        self,
        tol_energy=1e-6,
        max_iters=100,
        gate_radius_fraction=0.25,
        allow_projective=True,
        bounds=None,
    ):
        self.tol_energy = tol_energy
        self.max_iters = max_iters
        self.gate_radius_fraction = gate_radius_fraction
        self.allow_projective = allow_projective
        self.bounds = bounds

    def _config(self):
        return RegistrationConfig(
            tol_energy=self.tol_energy,
            max_iters=self.max_iters,
            gate_radius_fraction=self.gate_radius_fraction,
            allow_projective=self.allow_projective,
        )

    def fit(self, X, y):
        result = register_pair(y, X, bounds=self.bounds, config=self._config())
        self.homography_ = result.h
        self.energy_ = result.energy
        self.n_iter_ = result.iterations
        self.model_kind_ = result.model_kind
        self.energy_history_ = list(result.energy_history)
        return self

    def transform(self, X):
        self._check_fitted()
        return geometry.apply_homography(self.homography_, np.asarray(X, dtype=np.float64))

    def inverse_transform(self, X):
        self._check_fitted()
        return geometry.apply_homography(
            geometry.invert(self.homography_), np.asarray(X, dtype=np.float64)
        )

    def _check_fitted(self):
        if not hasattr(self, "homography_"):
            raise NotFittedError("PointSetRegistration is not fitted yet")


class Stitcher(BaseEstimator, TransformerMixin):
    """Full stitching pipeline behind a fit/transform interface.

    ``fit(X, y)`` takes the image list X and mask list y (masks are derived
    with the fallback segmenter when y is None), recovers the chain order
    and per-image transforms and renders the panorama. ``transform(X)``
    re-renders a same-geometry image list with the fitted plan, so a second
    acquisition can be composed without re-registering.
    """

    def __init__(
        self,
        tol_energy=1e-6,
        max_iters=100,
        gate_radius_fraction=0.25,
        allow_projective=True,
        lambda_color=1.0,
        lambda_grad=1.0,
        lambda_feat=0.5,
        seam_axis="vertical",
        blend_k=0.5,
        blend_band=32.0,
        exact_order=False,
        reference_override=None,
        segment_threshold=0.7,
        segment_min_area=20,
        extractor=None,
    ):
        self.tol_energy = tol_energy
        self.max_iters = max_iters
        self.gate_radius_fraction = gate_radius_fraction
        self.allow_projective = allow_projective
        self.lambda_color = lambda_color
        self.lambda_grad = lambda_grad
        self.lambda_feat = lambda_feat
        self.seam_axis = seam_axis
        self.blend_k = blend_k
        self.blend_band = blend_band
        self.exact_order = exact_order
        self.reference_override = reference_override
        self.segment_threshold = segment_threshold
        self.segment_min_area = segment_min_area
        self.extractor = extractor

    def fit(self, X, y=None):
        masks = y
        if masks is None:
            masks = [
                fallback_segment(im, self.segment_threshold, self.segment_min_area)
                for im in X
            ]
        result = stitch_all(
            X,
            masks,
            registration=RegistrationConfig(
                tol_energy=self.tol_energy,
                max_iters=self.max_iters,
                gate_radius_fraction=self.gate_radius_fraction,
                allow_projective=self.allow_projective,
            ),
            weights=SeamWeights(self.lambda_color, self.lambda_grad, self.lambda_feat),
            extractor=self.extractor,
            blend=BlendConfig(k=self.blend_k, band=self.blend_band),
            seam_axis=self.seam_axis,
            exact_order=self.exact_order,
            reference_override=self.reference_override,
        )
        self.order_ = list(result.plan.order)
        self.reference_ = result.plan.reference
        self.homographies_ = list(result.plan.chained)
        self.canvas_ = result.canvas
        self.panorama_ = result.panorama
        self.validity_ = result.validity
        self.report_ = result.report
        self.plan_ = result.plan
        return self

    def transform(self, X):
        """Warp and fuse a new image list with the fitted geometry."""
        self._check_fitted()
        if len(X) != len(self.homographies_):
            raise ValueError("image count differs from the fitted plan")
        imgs = [check_image(im, f"image {i}") for i, im in enumerate(X)]
        canvas = compute_canvas(self.plan_, [(im.shape[1], im.shape[0]) for im in imgs])
        pano, valid = geometry.warp_image(
            imgs[self.order_[0]], self.homographies_[self.order_[0]], canvas.bbox
        )
        from .composition import _fuse_step  # local import to keep API surface tidy

        weights = SeamWeights(self.lambda_color, self.lambda_grad, self.lambda_feat)
        blend_cfg = BlendConfig(k=self.blend_k, band=self.blend_band)
        for prev, nxt in zip(self.order_, self.order_[1:]):
            img, img_valid = geometry.warp_image(imgs[nxt], self.homographies_[nxt], canvas.bbox)
            pano, valid, _, _ = _fuse_step(
                pano, valid, img, img_valid, (prev, nxt), weights, self.extractor,
                blend_cfg, self.seam_axis,
            )
        return pano

    def fit_transform(self, X, y=None):
        return self.fit(X, y).panorama_

    def _check_fitted(self):
        if not hasattr(self, "plan_"):
            raise NotFittedError("Stitcher is not fitted yet")
