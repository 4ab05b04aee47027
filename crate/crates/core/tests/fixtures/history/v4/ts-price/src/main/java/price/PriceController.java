package price;

import org.springframework.web.bind.annotation.*;

@RestController
@RequestMapping("/api/v1/price")
public class PriceController {
    private final PriceService priceService;

    public PriceController(PriceService priceService) {
        this.priceService = priceService;
    }

    @PostMapping("/query")
    public PriceResult query(@RequestBody PriceQuery q) {
        return priceService.compute(q);
    }
}
