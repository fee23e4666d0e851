from .errors import CapExceededError


class Limits:
    """
    Size caps for the exact (exponential-cost) parts of the lab.
    """

    # Transfer matrix
    MAX_L = 16
    RESIDUAL_TOL = 1e-10

    # Slab observables
    MAX_SLAB_WIDTH = 3

    # Brute-force torus enumeration
    MAX_TORUS_L = 8
    MAX_TORUS_SITES = 24

    # Exhaustive height-function enumeration
    MAX_EXACT_FACES = 16

    # Fair-coin enumeration over odd components or odd tree vertices
    MAX_COIN_ENUMERATION = 20

    @classmethod
    def validate_L(cls, L: int, cap: int | None = None) -> int:
        """
        Check a cylinder circumference.

        Args:
            L: Circumference (number of horizontal arrows per column)
            cap: Optional override of ``MAX_L``

        Returns:
            L as an int

        Raises:
            ValueError: If L is odd or smaller than 2
            CapExceededError: If L is above the cap
        """
        cap = cls.MAX_L if cap is None else cap
        if int(L) != L:
            raise ValueError(f"L must be an integer, got {L}")
        L = int(L)
        if L < 2 or L % 2:
            raise ValueError(f"L must be even and at least 2, got {L}")
        if L > cap:
            raise CapExceededError(f"L={L} exceeds the configured cap {cap}")
        return L

    @classmethod
    def validate_slab_width(cls, width: int) -> int:
        if width < 0:
            raise ValueError(f"Slab width must be nonnegative, got {width}")
        if width > cls.MAX_SLAB_WIDTH:
            raise CapExceededError(
                f"Slab width {width} exceeds the cap {cls.MAX_SLAB_WIDTH}"
            )
        return width

    @classmethod
    def validate_torus(cls, M: int, L: int) -> tuple[int, int]:
        """
        Check the size of a torus handed to brute-force enumeration.

        Raises:
            ValueError: If M < 1 or L is not even
            CapExceededError: If L or M*L exceeds the enumeration caps
        """
        if M < 1:
            raise ValueError(f"M must be positive, got {M}")
        L = cls.validate_L(L, cap=cls.MAX_TORUS_L)
        if M * L > cls.MAX_TORUS_SITES:
            raise CapExceededError(
                f"Torus {M}x{L} has {M * L} vertices, above the cap "
                f"{cls.MAX_TORUS_SITES}"
            )
        return M, L
